#pragma once

#include "perorbit/model.hpp"

#include <json.hpp>

#include <string>

namespace perorbit {

using Json = nlohmann::json;

/// System file schema:
///   { "dim", "mass", "damping", "nonlinearity": {"type": ...}, "forcing": {"type": ..., "period": ...} }
/// Custom-callback nonlinearities have no file form and are rejected.
Json system_to_json(const MechanicalSystem& sys);
MechanicalSystem system_from_json(const Json& j);
MechanicalSystem system_from_json_text(const std::string& text);

Json forcing_to_json(const ForcingSignal& f);
ForcingSignal forcing_from_json(const Json& j, int dim);

Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vec& v);
Vec vector_from_json(const Json& j, const std::string& what);

/// Shortest round-trip formatting with 17 significant digits.
std::string format_double(double x);

}  // namespace perorbit
