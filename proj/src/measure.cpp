#include "mvom/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mvom/error.hpp"

namespace mvom {

namespace {

constexpr double kWeightTolerance = 1e-12;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns the optimal total cost.
double min_cost_assignment(const std::vector<double>& cost, std::size_t n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(p[j] - 1) * n + (j - 1)];
  return total;
}

/// Walks two cumulative-weight sequences in the given atom orders, pairing
/// mass greedily (north-west corner rule). With sorted 1-D atoms this is the
/// optimal monotone coupling; in any order it is an admissible coupling.
double northwest_corner_cost(const Measure& mu, const std::vector<std::size_t>& order_mu, const Measure& nu,
                             const std::vector<std::size_t>& order_nu) {
  auto wm = mu.weights();
  auto wn = nu.weights();
  std::size_t i = 0, j = 0;
  double rem_i = wm[order_mu[0]], rem_j = wn[order_nu[0]];
  double cost = 0.0;
  while (i < order_mu.size() && j < order_nu.size()) {
    const double mass = std::min(rem_i, rem_j);
    cost += mass * squared_distance(mu.atom(order_mu[i]), nu.atom(order_nu[j]));
    rem_i -= mass;
    rem_j -= mass;
    // Breakpoints closer than the weight tolerance are treated as coincident.
    if (rem_i <= kWeightTolerance * 0.5 && ++i < order_mu.size()) rem_i += wm[order_mu[i]];
    if (rem_j <= kWeightTolerance * 0.5 && ++j < order_nu.size()) rem_j += wn[order_nu[j]];
  }
  return cost;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

std::vector<std::size_t> sorted_order(const Measure& mu) {
  auto order = identity_order(mu.size());
  auto atoms = mu.atoms();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  return order;
}

}  // namespace

Measure::Measure(Kind kind, int dim, std::vector<double> atoms, std::vector<double> weights)
    : kind_(kind), dim_(dim), atoms_(std::move(atoms)), weights_(std::move(weights)) {
  require(dim_ >= 1, ErrorCode::InvalidMeasure, "measure dimension must be >= 1");
  require(!weights_.empty(), ErrorCode::InvalidMeasure, "measure has no atoms");
  require(atoms_.size() == weights_.size() * static_cast<std::size_t>(dim_), ErrorCode::InvalidMeasure,
          "atom array size does not match weights and dimension");
  require(all_finite(atoms_), ErrorCode::InvalidMeasure, "measure atom is not finite");
  double total = 0.0;
  for (double w : weights_) {
    require(w > 0.0 && w <= 1.0, ErrorCode::InvalidMeasure, "measure weight outside (0, 1]: " + std::to_string(w));
    total += w;
  }
  require(std::abs(total - 1.0) <= kWeightTolerance, ErrorCode::InvalidMeasure,
          "measure weights sum to " + std::to_string(total));
}

Measure Measure::dirac(std::span<const double> point) {
  return Measure(Kind::Dirac, static_cast<int>(point.size()), Vec(point.begin(), point.end()), {1.0});
}

Measure Measure::empirical(int dim, std::vector<double> atoms, std::vector<double> weights) {
  return Measure(Kind::Empirical, dim, std::move(atoms), std::move(weights));
}

Measure Measure::uniform(int dim, std::vector<double> atoms) {
  require(dim >= 1 && !atoms.empty() && atoms.size() % dim == 0, ErrorCode::InvalidMeasure,
          "uniform measure needs a positive multiple of the dimension");
  const std::size_t count = atoms.size() / dim;
  return Measure(Kind::Empirical, dim, std::move(atoms), std::vector<double>(count, 1.0 / count));
}

bool Measure::has_uniform_weights() const {
  const double w0 = weights_.front();
  return std::all_of(weights_.begin(), weights_.end(), [w0](double w) { return w == w0; });
}

Measure Measure::translated(std::span<const double> shift) const {
  require(static_cast<int>(shift.size()) == dim_, ErrorCode::DimensionMismatch, "translation dimension mismatch");
  Vec atoms = atoms_;
  for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i] += shift[i % dim_];
  return Measure(kind_, dim_, std::move(atoms), weights_);
}

Measure Measure::scaled(double factor) const {
  Vec atoms = atoms_;
  for (double& a : atoms) a *= factor;
  return Measure(kind_, dim_, std::move(atoms), weights_);
}

W2Result w2_distance(const Measure& mu, const Measure& nu) {
  require(mu.dim() == nu.dim(), ErrorCode::DimensionMismatch,
          "w2_distance: dimensions " + std::to_string(mu.dim()) + " and " + std::to_string(nu.dim()));

  // Against a point mass the only coupling is the product one.
  if (mu.size() == 1 || nu.size() == 1) {
    const Measure& point = mu.size() == 1 ? mu : nu;
    const Measure& other = mu.size() == 1 ? nu : mu;
    double cost = 0.0;
    for (std::size_t i = 0; i < other.size(); ++i)
      cost += other.weights()[i] * squared_distance(other.atom(i), point.atom(0));
    return {std::sqrt(cost), true};
  }

  if (mu.dim() == 1)
    return {std::sqrt(std::max(0.0, northwest_corner_cost(mu, sorted_order(mu), nu, sorted_order(nu)))), true};

  if (mu.size() == nu.size() && mu.has_uniform_weights() && nu.has_uniform_weights() &&
      mu.size() <= kMaxAssignmentAtoms) {
    const std::size_t n = mu.size();
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = squared_distance(mu.atom(i), nu.atom(j));
    return {std::sqrt(std::max(0.0, min_cost_assignment(cost, n) / static_cast<double>(n))), true};
  }

  return {std::sqrt(northwest_corner_cost(mu, identity_order(mu.size()), nu, identity_order(nu.size()))), false};
}

Vec mean(const Measure& mu) {
  Vec m(mu.dim(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto a = mu.atom(i);
    for (int k = 0; k < mu.dim(); ++k) m[k] += mu.weights()[i] * a[k];
  }
  return m;
}

double second_moment(const Measure& mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weights()[i] * dot(mu.atom(i), mu.atom(i));
  return s;
}

}  // namespace mvom
