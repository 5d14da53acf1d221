#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mvom/linalg.hpp"

namespace mvom {

/// R^d-valued path on the uniform grid t_k = k / n, k = 0..n, of [0, 1].
/// Node values are stored row-major; times are always derived from n.
class Path {
 public:
  Path() = default;
  /// values holds (n + 1) * dim doubles.
  Path(int dim, int intervals, std::vector<double> values);

  static Path zeros(int dim, int intervals);
  static Path from_function(int dim, int intervals, const std::function<void(double, std::span<double>)>& fn);
  static Path from_scalar_function(int intervals, const std::function<double(double)>& fn);
  static Path linear(std::span<const double> from, std::span<const double> to, int intervals);

  int dim() const { return dim_; }
  int intervals() const { return intervals_; }
  int nodes() const { return intervals_ + 1; }
  double step() const { return 1.0 / intervals_; }
  double time(int k) const { return static_cast<double>(k) / intervals_; }

  std::span<const double> at(int k) const { return std::span<const double>(values_).subspan(k * dim_, dim_); }
  std::span<double> at(int k) { return std::span<double>(values_).subspan(k * dim_, dim_); }
  double operator()(int k, int i) const { return values_[k * dim_ + i]; }
  double& operator()(int k, int i) { return values_[k * dim_ + i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Node-wise difference; grids and dimensions must agree.
  Path operator-(const Path& other) const;
  /// Coordinate i of every node.
  Vec coordinate(int i) const;

 private:
  int dim_ = 0;
  int intervals_ = 0;
  std::vector<double> values_;
};

/// Tube and comparison norms. Hoelder needs alpha in (0, 1/4) and Lp needs
/// p > 4; L2 exists as the dominated reference norm.
struct NormKind {
  enum class Type { Sup, Holder, Lp, L2 };
  Type type = Type::Sup;
  double parameter = 0.0;

  static NormKind sup() { return {Type::Sup, 0.0}; }
  static NormKind holder(double alpha);
  static NormKind lp(double p);
  static NormKind l2() { return {Type::L2, 2.0}; }

  std::string to_string() const;
  static NormKind parse(const std::string& text);
};

struct NormValue {
  double value = 0.0;
  /// Set when the Hoelder seminorm was taken over dyadic gaps only.
  bool approximate = false;
};

/// Grid size above which the Hoelder seminorm only visits pairs whose index
/// gap is a power of two.
inline constexpr int kHolderFullPairLimit = 2000;

/// Central differences inside, second-order one-sided differences at the
/// endpoints.
Path derivative(const Path& path);

NormValue norm(const Path& path, const NormKind& kind);

/// Composite trapezoid rule over [0, 1] for values on a uniform grid.
double quadrature(std::span<const double> values);

/// Cameron-Martin inner product int h1' . h2' dt. Both paths must start at 0.
double cm_inner(const Path& h1, const Path& h2);

void write_csv(std::ostream& out, const Path& path);
void write_csv(const std::string& file, const Path& path);
Path read_csv(std::istream& in);
Path read_csv(const std::string& file);

namespace detail {
/// Norm of node-major data of the given dimension on n intervals, without
/// building a Path; used by the simulator's per-trajectory loop.
double norm_of(std::span<const double> values, int dim, int intervals, const NormKind& kind, bool* approximate);
}  // namespace detail

}  // namespace mvom
