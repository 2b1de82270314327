#pragma once

#include "perorbit/model.hpp"

#include <map>
#include <utility>
#include <vector>

namespace perorbit::poly {

/// Sparse multivariate polynomial vector field: (dof, exponents) -> coefficient.
using FieldMap = std::map<std::pair<int, std::vector<int>>, double>;
/// Sparse scalar polynomial: exponents -> coefficient.
using ScalarMap = std::map<std::vector<int>, double>;

FieldMap canonical(int dim, const std::vector<PolyTerm>& terms);
ScalarMap canonical(int dim, const std::vector<Monomial>& monomials);

/// Gradient of a scalar polynomial as a vector field.
FieldMap gradient(int dim, const ScalarMap& v);

/// d S_row / d q_col as a scalar polynomial.
ScalarMap partial(const FieldMap& s, int row, int col);

/// Max coefficient difference between two sparse polynomials.
double max_difference(const ScalarMap& a, const ScalarMap& b);
double max_difference(const FieldMap& a, const FieldMap& b);

double evaluate(const Monomial& m, const Vec& q);

/// Univariate polynomial helpers; coefficients in ascending powers.
std::vector<double> trim(std::vector<double> c);
std::vector<double> derivative(const std::vector<double>& c);
double evaluate(const std::vector<double>& c, double x);
/// Real roots (companion-matrix eigenvalues, Newton-polished), ascending.
std::vector<double> real_roots(const std::vector<double>& c);

}  // namespace perorbit::poly
