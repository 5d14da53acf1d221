#include "mvom/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "mvom/error.hpp"

namespace mvom {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

}  // namespace

Polynomial::Polynomial(int dim, std::vector<Monomial> terms) : dim_(dim), terms_(std::move(terms)) {
  for (auto& m : terms_) {
    if (m.x_powers.empty()) m.x_powers.assign(dim_, 0);
    require(static_cast<int>(m.x_powers.size()) == dim_, ErrorCode::DimensionMismatch,
            "monomial has " + std::to_string(m.x_powers.size()) + " exponents, polynomial dimension is " +
                std::to_string(dim_));
    require(m.t_power >= 0 && std::all_of(m.x_powers.begin(), m.x_powers.end(), [](int e) { return e >= 0; }),
            ErrorCode::InvalidArgument, "negative monomial exponent");
  }
  normalize();
}

Polynomial Polynomial::constant(int dim, double c) {
  return Polynomial(dim, {Monomial{c, 0, std::vector<int>(dim, 0)}});
}

Polynomial Polynomial::univariate_in_x(int dim, int var, std::span<const double> coeffs) {
  std::vector<Monomial> terms;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    Monomial m{coeffs[k], 0, std::vector<int>(dim, 0)};
    m.x_powers[var] = static_cast<int>(k);
    terms.push_back(std::move(m));
  }
  return Polynomial(dim, std::move(terms));
}

Polynomial Polynomial::univariate_in_t(int dim, std::span<const double> coeffs) {
  std::vector<Monomial> terms;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    terms.push_back(Monomial{coeffs[k], static_cast<int>(k), std::vector<int>(dim, 0)});
  return Polynomial(dim, std::move(terms));
}

void Polynomial::normalize() {
  // Merge equal exponent patterns and drop exact zeros so that derivative
  // chains terminate in the empty polynomial.
  std::sort(terms_.begin(), terms_.end(), [](const Monomial& a, const Monomial& b) {
    if (a.t_power != b.t_power) return a.t_power < b.t_power;
    return a.x_powers < b.x_powers;
  });
  std::vector<Monomial> merged;
  for (auto& m : terms_) {
    if (!merged.empty() && merged.back().t_power == m.t_power && merged.back().x_powers == m.x_powers)
      merged.back().coef += m.coef;
    else
      merged.push_back(std::move(m));
  }
  std::erase_if(merged, [](const Monomial& m) { return m.coef == 0.0; });
  terms_ = std::move(merged);
}

int Polynomial::total_degree() const {
  int deg = 0;
  for (const auto& m : terms_) {
    int d = m.t_power;
    for (int e : m.x_powers) d += e;
    deg = std::max(deg, d);
  }
  return deg;
}

bool Polynomial::coefficients_finite() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Monomial& m) { return std::isfinite(m.coef); });
}

double Polynomial::operator()(double t, std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& m : terms_) {
    double v = m.coef * ipow(t, m.t_power);
    for (int i = 0; i < dim_; ++i)
      if (m.x_powers[i] != 0) v *= ipow(x[i], m.x_powers[i]);
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::d_dt() const {
  std::vector<Monomial> out;
  for (const auto& m : terms_) {
    if (m.t_power == 0) continue;
    Monomial d = m;
    d.coef *= m.t_power;
    d.t_power -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(dim_, std::move(out));
}

Polynomial Polynomial::d_dx(int var) const {
  std::vector<Monomial> out;
  for (const auto& m : terms_) {
    if (m.x_powers[var] == 0) continue;
    Monomial d = m;
    d.coef *= m.x_powers[var];
    d.x_powers[var] -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(dim_, std::move(out));
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (dim_ == 0 && terms_.empty()) dim_ = other.dim_;
  require(dim_ == other.dim_, ErrorCode::DimensionMismatch, "polynomial dimension mismatch in sum");
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  normalize();
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  require(a.dim_ == b.dim_, ErrorCode::DimensionMismatch, "polynomial dimension mismatch in product");
  std::vector<Monomial> out;
  for (const auto& ma : a.terms_)
    for (const auto& mb : b.terms_) {
      Monomial m{ma.coef * mb.coef, ma.t_power + mb.t_power, ma.x_powers};
      for (int i = 0; i < a.dim_; ++i) m.x_powers[i] += mb.x_powers[i];
      out.push_back(std::move(m));
    }
  return Polynomial(a.dim_, std::move(out));
}

PolynomialJet::PolynomialJet(Polynomial p) : value(std::move(p)) {
  const int d = value.dim();
  dt = value.d_dt();
  dx.reserve(d);
  for (int i = 0; i < d; ++i) dx.push_back(value.d_dx(i));
  dxx.assign(d, std::vector<Polynomial>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) dxx[i][j] = dx[i].d_dx(j);
  dtdx.reserve(d);
  for (int i = 0; i < d; ++i) dtdx.push_back(dx[i].d_dt());
}

}  // namespace mvom
