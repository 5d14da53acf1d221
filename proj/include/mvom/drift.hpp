#pragma once

#include <span>
#include <vector>

#include "mvom/linalg.hpp"
#include "mvom/measure.hpp"
#include "mvom/polynomial.hpp"

namespace mvom {

enum class DriftKind { PolySeparable1D, LinearMeanField, DistributionFree };

const char* to_string(DriftKind kind);

inline constexpr int kDefaultMaxDegree = 10;

/// Moments of the law that a drift actually reads: for every interaction
/// feature R_m, the integrals of R_m, dR_m/dt and grad_y R_m against mu.
struct LawMoments {
  Vec value;            // [m]
  Vec time_derivative;  // [m]
  Vec gradient;         // [m * d + i]
};

/// Mean-field drift f(t, x, mu) in kernel form
///
///   f_k(t, x, mu) = P_k(t, x) + sum_{terms of k} Q(t, x) * int R_m(t, y) mu(dy)
///
/// with polynomial P, Q, R. All three public families compile to this form,
/// which makes every x-, t- and measure-derivative exact.
class DriftSpec {
 public:
  using Coefficients = std::vector<double>;
  /// Rows are components, columns are state coordinates; each entry holds the
  /// coefficients of a polynomial in t (empty means zero).
  using TimePolyMatrix = std::vector<std::vector<Coefficients>>;

  struct SeparableKernel {
    Coefficients outer;  // p_m(x), ascending powers
    Coefficients inner;  // q_m(y), ascending powers
  };

  /// d = 1. local[j][k] multiplies t^j x^k; each kernel contributes
  /// p_m(x) * int q_m(y) mu(dy).
  static DriftSpec poly_separable_1d(std::vector<Coefficients> local, std::vector<SeparableKernel> kernels,
                                     int max_degree = kDefaultMaxDegree);

  /// f(t, x, mu) = A(t) x + b(t) + C(t) int y mu(dy).
  static DriftSpec linear_mean_field(int dim, TimePolyMatrix a, std::vector<Coefficients> b, TimePolyMatrix c,
                                     int max_degree = kDefaultMaxDegree);

  /// f(t, x, mu) = F(t, x); components[k] is F_k.
  static DriftSpec distribution_free(int dim, std::vector<Polynomial> components,
                                     int max_degree = kDefaultMaxDegree);

  DriftKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool has_mean_field() const { return !interactions_.empty(); }
  std::size_t feature_count() const { return features_.size(); }

  LawMoments moments(double t, const Measure& mu) const;
  /// Moments of the Dirac mass at y.
  LawMoments moments_dirac(double t, std::span<const double> y) const;
  /// int R_m(t, y) mu(dy) only, for a sample of equally weighted points
  /// (row-major); summation runs in index order.
  Vec moment_values_uniform(double t, std::span<const double> points) const;

  /// Drift value given precomputed moment values. This is the hot path of
  /// the particle simulator.
  void eval(double t, std::span<const double> x, std::span<const double> moment_values, std::span<double> out) const;

  struct Interaction {
    int component = 0;
    PolynomialJet outer;  // Q(t, x)
    int feature = 0;      // index m of R_m
  };

  const std::vector<PolynomialJet>& local() const { return local_; }
  const std::vector<Interaction>& interactions() const { return interactions_; }
  const std::vector<PolynomialJet>& features() const { return features_; }

 private:
  DriftSpec(DriftKind kind, int dim) : kind_(kind), dim_(dim) {}
  void validate(int max_degree) const;

  DriftKind kind_;
  int dim_;
  std::vector<PolynomialJet> local_;
  std::vector<Interaction> interactions_;
  std::vector<PolynomialJet> features_;
};

/// Everything about f at one (t, x) for given law moments.
struct DriftJet {
  Vec f;
  Matrix grad_x;      // [k][i] = d f_k / d x_i
  Vec laplacian;      // [k] = sum_i d^2 f_k / d x_i^2
  Vec dt;             // d f / dt with the law held fixed
  double div = 0.0;   // sum_k d f_k / d x_k
  Vec grad_div;       // d div / d x_i
  Matrix l_derivative;  // [k][i] = int d_mu f_k(t, x, mu)(y)_i mu(dy)
  Vec l_derivative_div;  // [i] = int d_mu div(t, x, mu)(y)_i mu(dy)
};

DriftJet drift_jet(const DriftSpec& spec, double t, std::span<const double> x, const LawMoments& moments);
/// Jet along the diagonal mu = delta_x. The total Jacobian of
/// x -> f(t, x, delta_x) is grad_x + l_derivative.
DriftJet dirac_jet(const DriftSpec& spec, double t, std::span<const double> x);

Vec eval_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu);
Matrix grad_x_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu);
Vec laplacian_trace_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu);
Vec dt_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu);
double divergence_x(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu);
/// Lions derivative d_mu f(t, x, mu)(y): rows are components of f.
Matrix l_derivative(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu,
                    std::span<const double> y);
/// int d_mu f(t, phi, mu)(y) phidot mu(dy), the rate of change of f through
/// the law when the law is transported with velocity phidot.
Vec mean_field_time_term(const DriftSpec& spec, double t, std::span<const double> phi,
                         std::span<const double> phidot, const Measure& mu);

namespace models {

/// f = 0 in R^d.
DriftSpec zero(int dim = 1);
/// Distribution-free Ornstein-Uhlenbeck drift f = -rate * x.
DriftSpec ornstein_uhlenbeck(double rate = 1.0, int dim = 1);
/// f(x, mu) = (x - x^3) int y mu(dy); metastable states 1, -1, 0.
DriftSpec bistable_mean_field();
/// f(x, mu) = int y mu(dy); the law's mean solves m' = m.
DriftSpec mean_attraction();

}  // namespace models

}  // namespace mvom
