#include <doctest.h>

#include <random>

#include "mvom/drift.hpp"
#include "mvom/error.hpp"
#include "oracles.hpp"

using namespace mvom;

namespace {


Vec at(double x) { return Vec{x}; }

/// A linear mean-field drift in d = 2 with time-dependent entries.
DriftSpec linear_2d() {
  DriftSpec::TimePolyMatrix a = {{{-1.0, 0.5}, {0.3}}, {{0.2}, {-2.0, 0.0, 1.0}}};
  std::vector<DriftSpec::Coefficients> b = {{0.1, 1.0}, {-0.4}};
  DriftSpec::TimePolyMatrix c = {{{0.7}, {}}, {{0.0, 0.5}, {-0.3}}};
  return DriftSpec::linear_mean_field(2, a, b, c);
}

/// A distribution-free polynomial field in d = 2 with cross terms.
DriftSpec polynomial_2d() {
  std::vector<Polynomial> f;
  f.push_back(Polynomial(2, {{1.0, 0, {1, 1}}, {-0.5, 1, {0, 2}}, {0.3, 0, {3, 0}}}));
  f.push_back(Polynomial(2, {{2.0, 1, {1, 0}}, {-1.0, 0, {0, 3}}, {0.25, 2, {2, 1}}}));
  return DriftSpec::distribution_free(2, f);
}

/// A time-dependent separable 1-D drift with two kernels.
DriftSpec separable_1d() {
  return DriftSpec::poly_separable_1d({{0.0, -1.0, 0.0, 0.2}, {0.5, 0.0, -0.3}},
                                      {{{0.0, 1.0, 0.0, -1.0}, {0.0, 1.0}}, {{1.0, 0.5}, {0.0, 0.0, 1.0}}});
}

}  // namespace

TEST_CASE("bistable mean-field drift values") {
  const auto spec = models::bistable_mean_field();
  CHECK(eval_f(spec, 0.3, at(1.0), Measure::dirac(1.0))[0] == doctest::Approx(0.0));
  CHECK(eval_f(spec, 0.3, at(0.5), Measure::dirac(0.5))[0] == doctest::Approx(0.1875));
  CHECK(grad_x_f(spec, 0.0, at(1.0), Measure::dirac(1.0))(0, 0) == doctest::Approx(-2.0));
  CHECK(laplacian_trace_f(spec, 0.0, at(0.0), Measure::dirac(0.0))[0] == doctest::Approx(0.0));
  CHECK(laplacian_trace_f(spec, 0.0, at(0.5), Measure::dirac(0.5))[0] == doctest::Approx(-6.0 * 0.25));
  CHECK(divergence_x(spec, 0.0, at(0.0), Measure::dirac(0.0)) == doctest::Approx(0.0));
  CHECK(l_derivative(spec, 0.0, at(0.5), Measure::dirac(0.5), at(0.5))(0, 0) == doctest::Approx(0.375));
  CHECK(mean_field_time_term(spec, 0.0, at(0.5), at(2.0), Measure::dirac(0.5))[0] == doctest::Approx(0.75));
}

TEST_CASE("distribution-free drift ignores the law") {
  const auto ou = models::ornstein_uhlenbeck();
  CHECK(eval_f(ou, 0.2, at(3.0), Measure::uniform({-4.0, 9.0}))[0] == doctest::Approx(-3.0));
  CHECK(grad_x_f(ou, 0.2, at(7.0), Measure::dirac(1.0))(0, 0) == doctest::Approx(-1.0));
  CHECK(divergence_x(ou, 0.9, at(0.1), Measure::dirac(0.0)) == doctest::Approx(-1.0));
  CHECK(l_derivative(ou, 0.5, at(1.0), Measure::dirac(2.0), at(3.0))(0, 0) == 0.0);
  CHECK(mean_field_time_term(ou, 0.5, at(1.0), at(5.0), Measure::dirac(2.0))[0] == 0.0);

  const auto poly = polynomial_2d();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = {u(rng), u(rng)}, y = {u(rng), u(rng)}, v = {u(rng), u(rng)};
    const auto jet = drift_jet(poly, 0.4, x, poly.moments(0.4, Measure::dirac(y)));
    for (double e : jet.l_derivative.data()) CHECK(e == 0.0);
    for (double e : jet.l_derivative_div) CHECK(e == 0.0);
    for (double e : mean_field_time_term(poly, 0.4, x, v, Measure::uniform(2, {u(rng), u(rng), u(rng), u(rng)})))
      CHECK(e == 0.0);
  }
}

TEST_CASE("linear mean-field drift") {
  const DriftSpec::TimePolyMatrix identity = {{{1.0}, {}}, {{}, {1.0}}};
  const auto spec = DriftSpec::linear_mean_field(2, identity, {}, identity);
  const Vec p = {0.3, -0.2};
  CHECK(divergence_x(spec, 0.5, p, Measure::dirac(p)) == doctest::Approx(2.0));
  const Matrix l = l_derivative(spec, 0.5, p, Measure::dirac(p), Vec{5.0, 7.0});
  CHECK(l(0, 0) == 1.0);
  CHECK(l(1, 1) == 1.0);
  CHECK(l(0, 1) == 0.0);
  const Vec v = {1.5, -2.5};
  const Vec mf = mean_field_time_term(spec, 0.5, p, v, Measure::dirac(p));
  CHECK(mf[0] == doctest::Approx(1.5));
  CHECK(mf[1] == doctest::Approx(-2.5));
  CHECK_THROWS_AS(DriftSpec::linear_mean_field(2, {{{1.0}}}, {}, {}), Error);
}

TEST_CASE("construction rejects bad specifications") {
  CHECK_THROWS_AS(DriftSpec::poly_separable_1d({{0.0, std::nan("")}}, {}), Error);
  CHECK_THROWS_AS(DriftSpec::poly_separable_1d({{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0}}, {}), Error);
  CHECK_THROWS_AS(DriftSpec::poly_separable_1d({}, {{{0, 0, 0, 0, 0, 1.0}, {0, 0, 0, 0, 0, 0, 1.0}}}), Error);
  CHECK_NOTHROW(DriftSpec::poly_separable_1d({{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0}}, {}, 11));
  const auto ou = models::ornstein_uhlenbeck();
  CHECK_THROWS_AS(eval_f(ou, 0.0, Vec{1.0, 2.0}, Measure::dirac(0.0)), Error);
  CHECK_THROWS_AS(eval_f(ou, 0.0, at(1.0), Measure::uniform(2, {0.0, 0.0})), Error);
}

TEST_CASE("symbolic derivatives match finite differences") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  std::uniform_real_distribution<double> ut(0.05, 0.95);
  const double h = 1e-5;
  auto close = [](double exact, double fd) { return std::abs(exact - fd) <= 1e-6 * std::max(1.0, std::abs(exact)); };

  for (const auto& spec : {separable_1d(), models::bistable_mean_field(), linear_2d(), polynomial_2d()}) {
    const int d = spec.dim();
    for (int trial = 0; trial < 25; ++trial) {
      const double t = ut(rng);
      Vec x(d), atoms(3 * d);
      for (double& e : x) e = u(rng);
      for (double& e : atoms) e = u(rng);
      const Measure mu = Measure::empirical(d, atoms, {0.2, 0.5, 0.3});
      const DriftJet jet = drift_jet(spec, t, x, spec.moments(t, mu));

      for (int k = 0; k < d; ++k) {
        CHECK(close(jet.dt[k], oracle::central_difference([&](double s) { return eval_f(spec, s, x, mu)[k]; }, t, h)));
        double lap = 0.0;
        for (int i = 0; i < d; ++i) {
          auto fk = [&](double s) {
            Vec y = x;
            y[i] = s;
            return eval_f(spec, t, y, mu)[k];
          };
          CHECK(close(jet.grad_x(k, i), oracle::central_difference(fk, x[i], h)));
          lap += (fk(x[i] + 1e-4) - 2 * fk(x[i]) + fk(x[i] - 1e-4)) / 1e-8;
        }
        CHECK(std::abs(jet.laplacian[k] - lap) <= 1e-5 * std::max(1.0, std::abs(lap)));
      }
      for (int i = 0; i < d; ++i) {
        auto div_i = [&](double s) {
          Vec y = x;
          y[i] = s;
          return divergence_x(spec, t, y, mu);
        };
        CHECK(close(jet.grad_div[i], oracle::central_difference(div_i, x[i], h)));
      }

      // Moving atom a by delta changes f by w_a * d_mu f(y = atom a) . delta.
      for (int a = 0; a < 3; ++a) {
        const Matrix l = l_derivative(spec, t, x, mu, mu.atom(a));
        for (int i = 0; i < d; ++i) {
          auto moved = [&](double s) {
            Vec shifted = atoms;
            shifted[a * d + i] = s;
            return Measure::empirical(d, shifted, {0.2, 0.5, 0.3});
          };
          for (int k = 0; k < d; ++k) {
            const double fd = oracle::central_difference(
                [&](double s) { return eval_f(spec, t, x, moved(s))[k]; }, atoms[a * d + i], h);
            CHECK(close(mu.weights()[a] * l(k, i), fd));
          }
        }
      }
    }
  }
}

TEST_CASE("total derivative along the diagonal") {
  // x -> f(t, x, delta_x) has Jacobian grad_x + l_derivative.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (const auto& spec : {separable_1d(), models::bistable_mean_field(), linear_2d()}) {
    const int d = spec.dim();
    for (int trial = 0; trial < 10; ++trial) {
      Vec x(d);
      for (double& e : x) e = u(rng);
      const DriftJet jet = dirac_jet(spec, 0.3, x);
      for (int i = 0; i < d; ++i) {
        auto along = [&](int k) {
          return [&, k](double s) {
            Vec y = x;
            y[i] = s;
            return eval_f(spec, 0.3, y, Measure::dirac(y))[k];
          };
        };
        for (int k = 0; k < d; ++k) {
          const double fd = oracle::central_difference(along(k), x[i], 1e-5);
          CHECK(jet.grad_x(k, i) + jet.l_derivative(k, i) == doctest::Approx(fd).epsilon(1e-6));
        }
        const double fd_div = oracle::central_difference(
            [&](double s) {
              Vec y = x;
              y[i] = s;
              return divergence_x(spec, 0.3, y, Measure::dirac(y));
            },
            x[i], 1e-5);
        CHECK(jet.grad_div[i] + jet.l_derivative_div[i] == doctest::Approx(fd_div).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("drift is affine in the law") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& spec : {separable_1d(), linear_2d()}) {
    const int d = spec.dim();
    Vec x(d), a(2 * d), b(3 * d);
    for (double& e : x) e = u(rng);
    for (double& e : a) e = u(rng);
    for (double& e : b) e = u(rng);
    const double lambda = 0.3;
    // Mixture lambda * uniform(a) + (1 - lambda) * uniform(b) as one measure.
    Vec atoms = a;
    atoms.insert(atoms.end(), b.begin(), b.end());
    const Measure mix = Measure::empirical(d, atoms, {lambda / 2, lambda / 2, (1 - lambda) / 3, (1 - lambda) / 3, (1 - lambda) / 3});
    const Vec fa = eval_f(spec, 0.6, x, Measure::uniform(d, a));
    const Vec fb = eval_f(spec, 0.6, x, Measure::uniform(d, b));
    const Vec fm = eval_f(spec, 0.6, x, mix);
    for (int k = 0; k < d; ++k) CHECK(fm[k] == doctest::Approx(lambda * fa[k] + (1 - lambda) * fb[k]).epsilon(1e-12));
  }
}
