#include "perorbit/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace perorbit::poly {

namespace {

std::vector<int> padded(int dim, const std::vector<int>& e) {
  require(static_cast<int>(e.size()) <= dim, "monomial has more exponents than the system dimension");
  std::vector<int> out(dim, 0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    require(e[i] >= 0, "negative exponent in polynomial term");
    out[i] = e[i];
  }
  return out;
}

}  // namespace

FieldMap canonical(int dim, const std::vector<PolyTerm>& terms) {
  FieldMap out;
  for (const auto& t : terms) {
    require(t.dof >= 0 && t.dof < dim, "polynomial term targets a DOF out of range");
    out[{t.dof, padded(dim, t.mono.exponents)}] += t.mono.coeff;
  }
  return out;
}

ScalarMap canonical(int dim, const std::vector<Monomial>& monomials) {
  ScalarMap out;
  for (const auto& m : monomials) out[padded(dim, m.exponents)] += m.coeff;
  return out;
}

FieldMap gradient(int dim, const ScalarMap& v) {
  FieldMap out;
  for (const auto& [e, c] : v) {
    for (int i = 0; i < dim; ++i) {
      if (e[i] == 0) continue;
      auto d = e;
      d[i] -= 1;
      out[{i, d}] += c * e[i];
    }
  }
  return out;
}

ScalarMap partial(const FieldMap& s, int row, int col) {
  ScalarMap out;
  for (const auto& [key, c] : s) {
    if (key.first != row) continue;
    const auto& e = key.second;
    if (e[col] == 0) continue;
    auto d = e;
    d[col] -= 1;
    out[d] += c * e[col];
  }
  return out;
}

double max_difference(const ScalarMap& a, const ScalarMap& b) {
  double worst = 0.0;
  for (const auto& [k, c] : a) {
    auto it = b.find(k);
    worst = std::max(worst, std::abs(c - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, c] : b)
    if (!a.count(k)) worst = std::max(worst, std::abs(c));
  return worst;
}

double max_difference(const FieldMap& a, const FieldMap& b) {
  double worst = 0.0;
  for (const auto& [k, c] : a) {
    auto it = b.find(k);
    worst = std::max(worst, std::abs(c - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, c] : b)
    if (!a.count(k)) worst = std::max(worst, std::abs(c));
  return worst;
}

double evaluate(const Monomial& m, const Vec& q) {
  double v = m.coeff;
  for (std::size_t i = 0; i < m.exponents.size(); ++i)
    for (int p = 0; p < m.exponents[i]; ++p) v *= q[static_cast<Eigen::Index>(i)];
  return v;
}

std::vector<double> trim(std::vector<double> c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  return c;
}

std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t i = 1; i < c.size(); ++i) d.push_back(c[i] * static_cast<double>(i));
  return d;
}

double evaluate(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

std::vector<double> real_roots(const std::vector<double>& coeffs) {
  auto c = trim(coeffs);
  std::vector<double> roots;
  if (c.size() <= 1) return roots;
  const int n = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  const auto d = derivative(c);
  for (int i = 0; i < n; ++i) {
    const auto z = es.eigenvalues()[i];
    const double scale = std::max(1.0, std::abs(z));
    if (std::abs(z.imag()) > 1e-7 * scale) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      const double dp = evaluate(d, x);
      if (dp == 0.0) break;
      const double step = evaluate(c, x) / dp;
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace perorbit::poly
