#pragma once

#include <span>
#include <vector>

#include "mvom/linalg.hpp"

namespace mvom {

/// Probability measure on R^d: either a Dirac mass or a finite weighted sum of
/// atoms. Atoms are stored row-major (atom i occupies [i*d, (i+1)*d)).
class Measure {
 public:
  enum class Kind { Dirac, Empirical };

  static Measure dirac(std::span<const double> point);
  static Measure dirac(double point) { return dirac(std::span<const double>(&point, 1)); }
  static Measure empirical(int dim, std::vector<double> atoms, std::vector<double> weights);
  /// Equal weights 1/count.
  static Measure uniform(int dim, std::vector<double> atoms);
  /// Convenience for d = 1.
  static Measure uniform(std::vector<double> atoms) { return uniform(1, std::move(atoms)); }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> atom(std::size_t i) const {
    return std::span<const double>(atoms_).subspan(i * dim_, dim_);
  }
  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> weights() const { return weights_; }
  bool has_uniform_weights() const;

  /// Same atoms, each shifted by `shift`.
  Measure translated(std::span<const double> shift) const;
  /// Same atoms, each multiplied by `factor`.
  Measure scaled(double factor) const;

 private:
  Measure(Kind kind, int dim, std::vector<double> atoms, std::vector<double> weights);

  Kind kind_ = Kind::Dirac;
  int dim_ = 0;
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

struct W2Result {
  double value = 0.0;
  /// False when `value` is the synchronous-coupling upper bound rather than
  /// the optimal-transport distance.
  bool exact = true;
};

/// Largest atom count for which the d > 1 uniform case is solved exactly by
/// assignment; beyond it the coupling bound is returned.
inline constexpr std::size_t kMaxAssignmentAtoms = 400;

W2Result w2_distance(const Measure& mu, const Measure& nu);

Vec mean(const Measure& mu);
double second_moment(const Measure& mu);

}  // namespace mvom
