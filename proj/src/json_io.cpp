#include "perorbit/json_io.hpp"

#include <cstdio>

namespace perorbit {

namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::parse, where + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(ErrorCode::parse, what + " must be a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) fail(ErrorCode::parse, what + " must be an integer");
  return j.get<int>();
}

std::vector<int> int_list(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorCode::parse, what + " must be an array");
  std::vector<int> out;
  for (const auto& x : j) out.push_back(integer(x, what));
  return out;
}

Json monomial_to_json(const Monomial& m) { return {{"exponents", m.exponents}, {"coeff", m.coeff}}; }

Monomial monomial_from_json(const Json& j, const std::string& where) {
  return {int_list(field(j, "exponents", where), where + ".exponents"),
          number(field(j, "coeff", where), where + ".coeff")};
}

Json nonlinearity_to_json(const Nonlinearity& nl) {
  switch (nl.kind()) {
    case Nonlinearity::Kind::polynomial: {
      Json terms = Json::array();
      for (const auto& t : nl.terms())
        terms.push_back({{"dof", t.dof}, {"exponents", t.mono.exponents}, {"coeff", t.mono.coeff}});
      Json out = {{"type", "polynomial"}, {"terms", terms}};
      if (nl.has_potential()) {
        Json pot = Json::array();
        for (const auto& m : nl.potential_terms()) pot.push_back(monomial_to_json(m));
        out["potential"] = pot;
      }
      return out;
    }
    case Nonlinearity::Kind::chain: {
      Json springs = Json::array();
      for (const auto& s : nl.springs()) springs.push_back({{"coeffs", s.coeffs}});
      return {{"type", "chain"}, {"springs", springs}};
    }
    case Nonlinearity::Kind::pendulum:
      return {{"type", "pendulum"}, {"cp", nl.pendulum_cp()}};
    case Nonlinearity::Kind::custom:
      break;
  }
  fail(ErrorCode::invalid_argument, "custom-callback nonlinearities cannot be serialized");
}

Nonlinearity nonlinearity_from_json(const Json& j, int dim) {
  const std::string where = "nonlinearity";
  const Json& type = field(j, "type", where);
  if (!type.is_string()) fail(ErrorCode::parse, "nonlinearity.type must be a string");
  const auto t = type.get<std::string>();
  if (t == "polynomial") {
    const Json& terms = field(j, "terms", where);
    if (!terms.is_array()) fail(ErrorCode::parse, "nonlinearity.terms must be an array");
    std::vector<PolyTerm> out;
    for (const auto& term : terms) {
      const std::string w = "nonlinearity.terms[]";
      out.push_back({integer(field(term, "dof", w), w + ".dof"), monomial_from_json(term, w)});
    }
    if (j.contains("potential")) {
      std::vector<Monomial> pot;
      for (const auto& m : j.at("potential")) pot.push_back(monomial_from_json(m, "nonlinearity.potential[]"));
      return Nonlinearity::polynomial(dim, std::move(out), std::move(pot));
    }
    return Nonlinearity::polynomial(dim, std::move(out));
  }
  if (t == "chain") {
    const Json& springs = field(j, "springs", where);
    if (!springs.is_array()) fail(ErrorCode::parse, "nonlinearity.springs must be an array");
    std::vector<SpringLaw> laws;
    for (const auto& s : springs) {
      SpringLaw law;
      for (const auto& c : field(s, "coeffs", "nonlinearity.springs[]"))
        law.coeffs.push_back(number(c, "spring coefficient"));
      laws.push_back(std::move(law));
    }
    if (static_cast<int>(laws.size()) != dim + 1) fail(ErrorCode::parse, "chain needs dim+1 springs");
    return Nonlinearity::chain(std::move(laws));
  }
  if (t == "pendulum") {
    if (dim != 1) fail(ErrorCode::parse, "pendulum nonlinearity is one-dimensional");
    return Nonlinearity::pendulum(number(field(j, "cp", where), "nonlinearity.cp"));
  }
  fail(ErrorCode::parse, "unknown nonlinearity type '" + t + "'");
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::parse, what + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) fail(ErrorCode::parse, what + " must be an array of rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(ErrorCode::parse, what + " rows must have equal length");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = number(row[static_cast<std::size_t>(k)], what + " entry");
  }
  return m;
}

Json vector_to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorCode::parse, what + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what + " entry");
  return v;
}

Json forcing_to_json(const ForcingSignal& f) {
  switch (f.kind()) {
    case ForcingSignal::Kind::triangular: {
      const auto& t = f.triangular_wave();
      return {{"type", "triangular"},
              {"period", f.period()},
              {"amplitude", t.amplitude * f.scale()},
              {"directions", vector_to_json(t.directions)},
              {"terms", t.terms}};
    }
    case ForcingSignal::Kind::fejer: {
      const auto& w = f.fejer_wave();
      return {{"type", "fejer"},
              {"period", f.period()},
              {"blocks", w.blocks},
              {"directions", vector_to_json(f.scale() * w.directions)},
              {"operator", {{"m", w.op_m}, {"c", w.op_c}, {"k", w.op_k}}}};
    }
    case ForcingSignal::Kind::fourier:
      break;
  }
  const auto& c = f.coefficients();
  Json harmonics = Json::array();
  for (int k = 1; k <= c.order(); ++k) {
    Vec s = c.sin_coef.row(k - 1).transpose();
    Vec co = c.cos_coef.row(k - 1).transpose();
    if (s.cwiseAbs().maxCoeff() == 0.0 && co.cwiseAbs().maxCoeff() == 0.0) continue;
    harmonics.push_back({{"k", k}, {"s", vector_to_json(s)}, {"c", vector_to_json(co)}});
  }
  return {{"type", "fourier"}, {"period", f.period()}, {"c0", vector_to_json(c.c0)}, {"harmonics", harmonics}};
}

ForcingSignal forcing_from_json(const Json& j, int dim) {
  const std::string where = "forcing";
  const Json& type = field(j, "type", where);
  if (!type.is_string()) fail(ErrorCode::parse, "forcing.type must be a string");
  const auto t = type.get<std::string>();
  const double period = number(field(j, "period", where), "forcing.period");
  if (!(period > 0.0)) fail(ErrorCode::parse, "forcing.period must be positive");
  auto directions = [&]() {
    Vec d = vector_from_json(field(j, "directions", where), "forcing.directions");
    if (d.size() != dim) fail(ErrorCode::parse, "forcing.directions must have dim entries");
    return d;
  };
  if (t == "fourier") {
    FourierCoefficients c;
    c.c0 = j.contains("c0") ? vector_from_json(j.at("c0"), "forcing.c0") : Vec::Zero(dim);
    if (c.c0.size() != dim) fail(ErrorCode::parse, "forcing.c0 must have dim entries");
    int order = 0;
    const Json harmonics = j.contains("harmonics") ? j.at("harmonics") : Json::array();
    if (!harmonics.is_array()) fail(ErrorCode::parse, "forcing.harmonics must be an array");
    for (const auto& h : harmonics) order = std::max(order, integer(field(h, "k", "forcing.harmonics[]"), "k"));
    c.sin_coef = Mat::Zero(order, dim);
    c.cos_coef = Mat::Zero(order, dim);
    for (const auto& h : harmonics) {
      const int k = h.at("k").get<int>();
      if (k < 1) fail(ErrorCode::parse, "harmonic index k must be >= 1");
      if (h.contains("s")) {
        Vec s = vector_from_json(h.at("s"), "forcing.harmonics[].s");
        if (s.size() != dim) fail(ErrorCode::parse, "harmonic s must have dim entries");
        c.sin_coef.row(k - 1) += s.transpose();
      }
      if (h.contains("c")) {
        Vec co = vector_from_json(h.at("c"), "forcing.harmonics[].c");
        if (co.size() != dim) fail(ErrorCode::parse, "harmonic c must have dim entries");
        c.cos_coef.row(k - 1) += co.transpose();
      }
    }
    return ForcingSignal::fourier(period, std::move(c));
  }
  if (t == "triangular") {
    const int terms = j.contains("terms") ? integer(j.at("terms"), "forcing.terms") : 200;
    return ForcingSignal::triangular(period, number(field(j, "amplitude", where), "forcing.amplitude"), directions(),
                                     terms);
  }
  if (t == "fejer") {
    double m = 0.0, c = 0.0, k = 1.0;
    if (j.contains("operator")) {
      const auto& op = j.at("operator");
      if (op.contains("m")) m = number(op.at("m"), "forcing.operator.m");
      if (op.contains("c")) c = number(op.at("c"), "forcing.operator.c");
      if (op.contains("k")) k = number(op.at("k"), "forcing.operator.k");
    }
    return ForcingSignal::fejer(period, integer(field(j, "blocks", where), "forcing.blocks"), directions(), m, c, k);
  }
  fail(ErrorCode::parse, "unknown forcing type '" + t + "'");
}

Json system_to_json(const MechanicalSystem& sys) {
  Json j = {{"dim", sys.dim()},
            {"mass", matrix_to_json(sys.mass())},
            {"damping", matrix_to_json(sys.damping())},
            {"nonlinearity", nonlinearity_to_json(sys.nonlinearity())},
            {"forcing", forcing_to_json(sys.forcing())}};
  if (!sys.name().empty()) j["name"] = sys.name();
  return j;
}

MechanicalSystem system_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::parse, "system file must be a JSON object");
  const int dim = integer(field(j, "dim", "system"), "dim");
  if (dim < 1) fail(ErrorCode::parse, "dim must be positive");
  Mat mass = matrix_from_json(field(j, "mass", "system"), "mass");
  Mat damping = matrix_from_json(field(j, "damping", "system"), "damping");
  if (mass.rows() != dim || mass.cols() != dim) fail(ErrorCode::parse, "mass must be dim x dim");
  if (damping.rows() != dim || damping.cols() != dim) fail(ErrorCode::parse, "damping must be dim x dim");
  auto nl = nonlinearity_from_json(field(j, "nonlinearity", "system"), dim);
  auto forcing = forcing_from_json(field(j, "forcing", "system"), dim);
  std::string name = j.contains("name") && j.at("name").is_string() ? j.at("name").get<std::string>() : "";
  return MechanicalSystem(std::move(mass), std::move(damping), std::move(nl), std::move(forcing), std::move(name));
}

MechanicalSystem system_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse, std::string("malformed JSON: ") + e.what());
  }
  return system_from_json(j);
}

}  // namespace perorbit
