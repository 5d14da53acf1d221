#include <doctest.h>

#include <random>

#include "mvom/action.hpp"
#include "mvom/error.hpp"
#include "oracles.hpp"

using namespace mvom;

namespace {

/// Classical OM functional for f = -theta x along phi(t) = sum c_j t^j, by
/// exact polynomial integration: -1/2 int (phi' + theta phi)^2 dt + theta / 2.
double classical_ou_action(double theta, const std::vector<double>& c) {
  std::vector<double> r(c.size(), 0.0);  // phi' + theta phi
  for (std::size_t j = 0; j < c.size(); ++j) {
    r[j] += theta * c[j];
    if (j >= 1) r[j - 1] += j * c[j];
  }
  double integral = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) integral += r[i] * r[j] / static_cast<double>(i + j + 1);
  return -0.5 * integral + 0.5 * theta;
}

Path polynomial_path(int n, const std::vector<double>& c) {
  return Path::from_scalar_function(n, [&](double t) {
    double v = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) v = v * t + c[j];
    return v;
  });
}

DriftSpec linear_2d() {
  DriftSpec::TimePolyMatrix a = {{{-1.0, 0.5}, {0.3}}, {{0.2}, {-2.0, 0.0, 1.0}}};
  DriftSpec::TimePolyMatrix c = {{{0.7}, {0.1}}, {{0.0, 0.5}, {-0.3}}};
  return DriftSpec::linear_mean_field(2, a, {{0.1, 1.0}, {-0.4}}, c);
}

DriftSpec polynomial_2d() {
  std::vector<Polynomial> f;
  f.push_back(Polynomial(2, {{1.0, 0, {1, 1}}, {-0.5, 1, {0, 2}}, {0.3, 0, {3, 0}}}));
  f.push_back(Polynomial(2, {{2.0, 1, {1, 0}}, {-1.0, 0, {0, 3}}, {0.25, 2, {2, 1}}}));
  return DriftSpec::distribution_free(2, f);
}

Path random_path(std::mt19937_64& rng, int dim, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Path p = Path::zeros(dim, n);
  for (double& v : p.values()) v = u(rng);
  return p;
}

}  // namespace

TEST_CASE("action examples") {
  const auto bistable = models::bistable_mean_field();
  const auto zero_path = Path::zeros(1, 100);
  const auto r0 = om_action(bistable, zero_path);
  CHECK(r0.kinetic == 0.0);
  CHECK(r0.divergence == 0.0);
  CHECK(r0.total == 0.0);
  CHECK(r0.n == 100);

  const auto ou = models::ornstein_uhlenbeck();
  const auto decay = om_action(ou, Path::from_scalar_function(2000, [](double t) { return std::exp(-t); }));
  CHECK(std::abs(decay.kinetic) <= 1e-6);
  CHECK(decay.divergence == doctest::Approx(0.5));
  CHECK(std::abs(decay.total - 0.5) <= 1e-6);

  const auto flat = om_action(ou, Path::from_scalar_function(100, [](double) { return 1.0; }));
  CHECK(flat.kinetic == doctest::Approx(-0.5));
  CHECK(flat.divergence == doctest::Approx(0.5));
  CHECK(std::abs(flat.total) <= 1e-12);
  CHECK(flat.total == flat.kinetic + flat.divergence);

  CHECK_THROWS_AS(om_action(ou, Path::zeros(2, 10)), Error);
}

TEST_CASE("kinetic term is never positive") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Path p = random_path(rng, 1, 40, 1.5);
    CHECK(om_action(models::bistable_mean_field(), p).kinetic <= 0.0);
  }
}

TEST_CASE("classical limit for distribution-free linear drifts") {
  for (double theta : {0.5, 1.0, 2.5}) {
    for (const auto& coeffs : std::vector<std::vector<double>>{{1.0}, {0.0, 1.0}, {0.3, -1.2, 0.8, 0.4}}) {
      const double exact = classical_ou_action(theta, coeffs);
      const double got = om_action(models::ornstein_uhlenbeck(theta), polynomial_path(2000, coeffs)).total;
      CHECK(std::abs(got - exact) < 1e-6);
    }
  }
}

TEST_CASE("action converges at second order under refinement") {
  const auto spec = models::bistable_mean_field();
  auto phi = [](double t) { return std::cos(3.0 * t) + 0.2 * t; };
  std::vector<double> totals;
  for (int n : {50, 100, 200, 400}) totals.push_back(om_action(spec, Path::from_scalar_function(n, phi)).total);
  for (int i = 0; i + 2 < static_cast<int>(totals.size()); ++i) {
    const double order = oracle::observed_order(std::abs(totals[i] - totals[i + 1]), std::abs(totals[i + 1] - totals[i + 2]));
    CHECK(order > 1.8);
    CHECK(order < 2.2);
  }
}

TEST_CASE("kinetic term vanishes along the deterministic flow") {
  // phi' = f(t, phi, delta_phi) = phi^2 - phi^4 from 0.5, by fine RK4.
  const auto spec = models::bistable_mean_field();
  auto rhs = [](double x) { return x * x - x * x * x * x; };
  const int n = 1000, sub = 20;
  const double h = 1.0 / (n * sub);
  Vec values(n + 1);
  double x = 0.5;
  values[0] = x;
  for (int k = 0; k < n; ++k) {
    for (int s = 0; s < sub; ++s) {
      const double k1 = rhs(x), k2 = rhs(x + 0.5 * h * k1), k3 = rhs(x + 0.5 * h * k2), k4 = rhs(x + h * k3);
      x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    values[k + 1] = x;
  }
  CHECK(std::abs(om_action(spec, Path(1, n, values)).kinetic) < 1e-8);
}

TEST_CASE("gradient is the derivative of the discrete objective") {
  std::mt19937_64 rng(17);
  const std::vector<DriftSpec> specs = {models::ornstein_uhlenbeck(), models::bistable_mean_field(), linear_2d(),
                                        polynomial_2d()};
  for (const auto& spec : specs) {
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 24;
      const Path p = random_path(rng, spec.dim(), n, 1.2);
      const Vec g = discrete_action_gradient(spec, p);
      REQUIRE(g.size() == static_cast<std::size_t>((n - 1) * spec.dim()));
      for (std::size_t c = 0; c < g.size(); ++c) {
        const std::size_t idx = static_cast<std::size_t>(spec.dim()) + c;  // skip node 0
        auto objective = [&](double v) {
          Path q = p;
          q.values()[idx] = v;
          return discrete_objective(spec, q);
        };
        const double fd = oracle::central_difference4(objective, p.values()[idx], 1e-4);
        CHECK(std::abs(g[c] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3));
      }
    }
  }
}

TEST_CASE("frozen-law gradient matches its own objective") {
  std::mt19937_64 rng(23);
  const auto spec = models::bistable_mean_field();
  const Path law = random_path(rng, 1, 20, 1.0);
  const Path p = random_path(rng, 1, 20, 1.0);
  const Vec g = discrete_action_gradient_frozen(spec, p, law);
  for (std::size_t c = 0; c < g.size(); ++c) {
    auto objective = [&](double v) {
      Path q = p;
      q.values()[c + 1] = v;
      return -om_action_frozen(spec, q, law).total;
    };
    const double fd = oracle::central_difference4(objective, p.values()[c + 1], 1e-4);
    CHECK(std::abs(g[c] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3));
  }
  // With the law frozen at the path itself the values coincide.
  CHECK(om_action_frozen(spec, p, p).total == doctest::Approx(om_action(spec, p).total).epsilon(1e-14));
}

TEST_CASE("zero drift: a straight line is stationary") {
  const Path line = Path::from_scalar_function(50, [](double t) { return t; });
  const auto spec = models::zero();
  const auto r = om_action(spec, line);
  CHECK(r.kinetic == doctest::Approx(-0.5));
  for (double g : discrete_action_gradient(spec, line)) CHECK(std::abs(g) < 1e-12);
}
