#pragma once

#include <span>
#include <vector>

namespace mvom {

/// One term c * t^a * x_1^b_1 * ... * x_d^b_d.
struct Monomial {
  double coef = 0.0;
  int t_power = 0;
  std::vector<int> x_powers;
};

/// Sparse polynomial in time and d space variables. Exact differentiation is
/// the only calculus offered; everything the action and Euler-Lagrange code
/// needs is assembled from these partials.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) {}
  Polynomial(int dim, std::vector<Monomial> terms);

  static Polynomial constant(int dim, double c);
  /// c_0 + c_1 x_var + c_2 x_var^2 + ... (no time dependence).
  static Polynomial univariate_in_x(int dim, int var, std::span<const double> coeffs);
  /// c_0 + c_1 t + c_2 t^2 + ... (no space dependence).
  static Polynomial univariate_in_t(int dim, std::span<const double> coeffs);

  int dim() const { return dim_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Largest t_power + sum(x_powers) over the terms; 0 for the zero polynomial.
  int total_degree() const;
  bool coefficients_finite() const;

  double operator()(double t, std::span<const double> x) const;

  Polynomial d_dt() const;
  Polynomial d_dx(int var) const;

  Polynomial& operator+=(const Polynomial& other);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  void normalize();

  int dim_ = 0;
  std::vector<Monomial> terms_;
};

/// A polynomial bundled with its first and second partials, so hot loops never
/// differentiate symbolically.
struct PolynomialJet {
  PolynomialJet() = default;
  explicit PolynomialJet(Polynomial p);

  Polynomial value;
  Polynomial dt;
  std::vector<Polynomial> dx;                // dx[i] = d/dx_i
  std::vector<std::vector<Polynomial>> dxx;  // dxx[i][j] = d^2/dx_i dx_j
  std::vector<Polynomial> dtdx;              // d^2/dt dx_i
};

}  // namespace mvom
