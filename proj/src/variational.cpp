#include "mvom/variational.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mvom/error.hpp"
#include "mvom/parallel.hpp"

namespace mvom {

std::string to_string(ElVariant variant) {
  switch (variant) {
    case ElVariant::MeanFieldRate:
      return "mean-field-rate";
    case ElVariant::PaperExample:
      return "paper-example";
    case ElVariant::TotalDerivative:
      return "total-derivative";
  }
  return "unknown";
}

ElVariant parse_el_variant(const std::string& text) {
  if (text == "mean-field-rate") return ElVariant::MeanFieldRate;
  if (text == "paper-example") return ElVariant::PaperExample;
  if (text == "total-derivative") return ElVariant::TotalDerivative;
  fail(ErrorCode::InvalidArgument, "unknown Euler-Lagrange variant '" + text + "'");
}

std::string to_string(InitialGuess guess) {
  switch (guess) {
    case InitialGuess::Linear:
      return "linear";
    case InitialGuess::StepJump:
      return "step";
    case InitialGuess::Tanh:
      return "tanh";
  }
  return "unknown";
}

InitialGuess parse_initial_guess(const std::string& text) {
  if (text == "linear") return InitialGuess::Linear;
  if (text == "step") return InitialGuess::StepJump;
  if (text == "tanh") return InitialGuess::Tanh;
  fail(ErrorCode::InvalidArgument, "unknown initial guess '" + text + "'");
}

Path initial_guess_path(InitialGuess guess, std::span<const double> x0, std::span<const double> x1, int n) {
  require(x0.size() == x1.size(), ErrorCode::DimensionMismatch, "endpoints differ in dimension");
  constexpr double kFrontSteepness = 10.0;
  return Path::from_function(static_cast<int>(x0.size()), n, [&](double t, std::span<double> x) {
    double s = t;  // fraction of the way from x0 to x1
    switch (guess) {
      case InitialGuess::Linear:
        break;
      case InitialGuess::StepJump:
        s = t < 0.5 ? 0.0 : 1.0;
        if (t == 1.0) s = 1.0;
        break;
      case InitialGuess::Tanh:
        s = 0.5 + 0.5 * std::tanh(kFrontSteepness * (t - 0.5)) / std::tanh(0.5 * kFrontSteepness);
        break;
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - s) * x0[i] + s * x1[i];
  });
}

Vec el_acceleration(const DriftSpec& spec, ElVariant variant, double t, std::span<const double> phi,
                    std::span<const double> phidot) {
  const int d = spec.dim();
  const DriftJet jet = dirac_jet(spec, t, phi);
  Vec a(d, 0.0);
  switch (variant) {
    case ElVariant::MeanFieldRate:
    case ElVariant::PaperExample: {
      const Vec drift_product = jet.grad_x.transposed() * jet.f;
      Vec mean_field(d, 0.0);
      if (variant == ElVariant::MeanFieldRate) {
        mean_field = jet.l_derivative * phidot;
      } else {
        require(d == 1, ErrorCode::InvalidArgument, "the paper-example variant is only defined for d = 1");
        mean_field[0] = jet.l_derivative(0, 0);
      }
      for (int k = 0; k < d; ++k) a[k] = jet.dt[k] + 0.5 * jet.laplacian[k] + drift_product[k] + mean_field[k];
      break;
    }
    case ElVariant::TotalDerivative: {
      const Matrix jac = jet.grad_x + jet.l_derivative;
      const Matrix jac_t = jac.transposed();
      const Vec rotation = (jac - jac_t) * phidot;
      const Vec drift_product = jac_t * jet.f;
      for (int k = 0; k < d; ++k)
        a[k] = jet.dt[k] + rotation[k] + drift_product[k] + 0.5 * (jet.grad_div[k] + jet.l_derivative_div[k]);
      break;
    }
  }
  return a;
}

Path el_residual(const DriftSpec& spec, const Path& path, ElVariant variant) {
  require(path.dim() == spec.dim(), ErrorCode::DimensionMismatch, "el_residual: path and drift dimensions differ");
  require(path.intervals() >= 3, ErrorCode::InvalidArgument, "el_residual needs n >= 3");
  const int n = path.intervals();
  const int d = path.dim();
  const double h = path.step();
  Path out = Path::zeros(d, n);
  Vec velocity(d);
  for (int k = 1; k < n; ++k) {
    for (int i = 0; i < d; ++i) velocity[i] = (path(k + 1, i) - path(k - 1, i)) / (2.0 * h);
    const Vec a = el_acceleration(spec, variant, path.time(k), path.at(k), velocity);
    for (int i = 0; i < d; ++i)
      out(k, i) = (path(k + 1, i) - 2.0 * path(k, i) + path(k - 1, i)) / (h * h) - a[i];
  }
  return out;
}

namespace {

constexpr double kBlowUpBound = 1e8;

double max_interior(const Path& p) {
  double m = 0.0;
  for (int k = 1; k < p.intervals(); ++k) m = std::max(m, max_abs(p.at(k)));
  return m;
}

/// RK4 integration of phi'' = a from (x0, v0); nullopt on blow-up.
std::optional<Path> shoot(const DriftSpec& spec, ElVariant variant, std::span<const double> x0,
                          std::span<const double> v0, int n, int substeps) {
  const int d = spec.dim();
  const double h = 1.0 / (static_cast<double>(n) * substeps);
  Vec state(2 * d), k1(2 * d), k2(2 * d), k3(2 * d), k4(2 * d), tmp(2 * d);
  std::copy(x0.begin(), x0.end(), state.begin());
  std::copy(v0.begin(), v0.end(), state.begin() + d);
  auto rhs = [&](double t, const Vec& y, Vec& out) {
    const std::span<const double> pos(y.data(), d), vel(y.data() + d, d);
    const Vec a = el_acceleration(spec, variant, t, pos, vel);
    for (int i = 0; i < d; ++i) {
      out[i] = y[d + i];
      out[d + i] = a[i];
    }
  };
  std::vector<double> values(static_cast<std::size_t>(n + 1) * d);
  std::copy(x0.begin(), x0.end(), values.begin());
  for (int k = 0; k < n; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const double t = (static_cast<double>(k) * substeps + s) * h;
      rhs(t, state, k1);
      for (int i = 0; i < 2 * d; ++i) tmp[i] = state[i] + 0.5 * h * k1[i];
      rhs(t + 0.5 * h, tmp, k2);
      for (int i = 0; i < 2 * d; ++i) tmp[i] = state[i] + 0.5 * h * k2[i];
      rhs(t + 0.5 * h, tmp, k3);
      for (int i = 0; i < 2 * d; ++i) tmp[i] = state[i] + h * k3[i];
      rhs(t + h, tmp, k4);
      for (int i = 0; i < 2 * d; ++i) state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!all_finite(state) || max_abs(state) > kBlowUpBound) return std::nullopt;
    }
    std::copy(state.begin(), state.begin() + d, values.begin() + static_cast<std::size_t>(k + 1) * d);
  }
  return Path(d, n, std::move(values));
}

struct ShootingOutcome {
  std::optional<Path> path;
  Vec velocity;
  int iterations = 0;
  double mismatch = 0.0;
  std::string message;
};

ShootingOutcome shooting_newton(const BVProblem& pb, Vec v0) {
  const int d = pb.drift.dim();
  const auto& ctl = pb.controls;
  const int substeps = std::max(1, (ctl.integration_steps + pb.n - 1) / pb.n);
  ShootingOutcome out;

  auto mismatch_of = [&](const Vec& v, Vec& g) -> std::optional<Path> {
    auto p = shoot(pb.drift, pb.variant, pb.x0, v, pb.n, substeps);
    if (!p) return std::nullopt;
    g.resize(d);
    for (int i = 0; i < d; ++i) g[i] = (*p)(pb.n, i) - pb.x1[i];
    return p;
  };

  Vec g;
  auto current = mismatch_of(v0, g);
  out.velocity = v0;
  if (!current) {
    std::ostringstream os;
    os << "shooting blew up for initial velocity (";
    for (int i = 0; i < d; ++i) os << (i ? ", " : "") << v0[i];
    os << ")";
    out.message = os.str();
    return out;
  }
  const double target = 1e-12 * (1.0 + max_abs(pb.x1));
  for (int it = 0; it < ctl.max_iterations; ++it) {
    out.mismatch = max_abs(g);
    if (out.mismatch <= target) {
      out.path = std::move(current);
      return out;
    }
    ++out.iterations;
    // Finite-difference Jacobian of the terminal mismatch.
    Matrix jac(d, d);
    for (int j = 0; j < d; ++j) {
      const double step = 1e-6 * (1.0 + std::abs(v0[j]));
      Vec vp = v0, vm = v0, gp, gm;
      vp[j] += step;
      vm[j] -= step;
      if (!mismatch_of(vp, gp) || !mismatch_of(vm, gm)) {
        out.message = "shooting blew up while forming the Jacobian";
        return out;
      }
      for (int i = 0; i < d; ++i) jac(i, j) = (gp[i] - gm[i]) / (2.0 * step);
    }
    Vec delta = g;
    if (!solve_dense(jac, delta)) {
      out.message = "singular shooting Jacobian";
      return out;
    }
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= ctl.max_halvings; ++halving) {
      Vec trial = v0, gt;
      for (int i = 0; i < d; ++i) trial[i] -= lambda * delta[i];
      auto p = mismatch_of(trial, gt);
      if (p && max_abs(gt) < out.mismatch) {
        v0 = std::move(trial);
        g = std::move(gt);
        current = std::move(p);
        accepted = true;
        break;
      }
      lambda *= ctl.damping;
    }
    out.velocity = v0;
    if (!accepted) {
      out.message = "damped Newton step failed to reduce the shooting mismatch";
      return out;
    }
  }
  out.mismatch = max_abs(g);
  if (out.mismatch <= target) {
    out.path = std::move(current);
  } else {
    out.message = "shooting did not converge within the iteration limit";
  }
  return out;
}

/// Newton iteration on the grid equations el_residual(x) = 0 with a
/// block-tridiagonal Jacobian. Returns the number of iterations taken.
int polish_on_grid(const BVProblem& pb, Path& path) {
  const int n = pb.n;
  const int d = pb.drift.dim();
  const double h = 1.0 / n;
  const int blocks = n - 1;
  const auto& ctl = pb.controls;

  auto residual_norm = [&](const Path& p) { return max_abs(el_residual(pb.drift, p, pb.variant).values()); };
  auto accel = [&](double t, const Vec& x, const Vec& v) { return el_acceleration(pb.drift, pb.variant, t, x, v); };

  int iterations = 0;
  double current = residual_norm(path);
  for (; iterations < ctl.max_iterations; ++iterations) {
    const double target = 1e-3 * ctl.tolerance * (1.0 + max_abs(path.values()));
    if (current <= target) break;

    const Path res = el_residual(pb.drift, path, pb.variant);
    std::vector<Matrix> sub(blocks), diag(blocks), super(blocks);
    std::vector<Vec> rhs(blocks);
    for (int b = 0; b < blocks; ++b) {
      const int k = b + 1;
      const double t = path.time(k);
      Vec x(path.at(k).begin(), path.at(k).end()), v(d);
      for (int i = 0; i < d; ++i) v[i] = (path(k + 1, i) - path(k - 1, i)) / (2.0 * h);
      Matrix da_dx(d, d), da_dv(d, d);
      for (int j = 0; j < d; ++j) {
        const double sx = 1e-6 * (1.0 + std::abs(x[j]));
        Vec xp = x, xm = x;
        xp[j] += sx;
        xm[j] -= sx;
        const Vec ap = accel(t, xp, v), am = accel(t, xm, v);
        const double sv = 1e-6 * (1.0 + std::abs(v[j]));
        Vec vp = v, vm = v;
        vp[j] += sv;
        vm[j] -= sv;
        const Vec bp = accel(t, x, vp), bm = accel(t, x, vm);
        for (int i = 0; i < d; ++i) {
          da_dx(i, j) = (ap[i] - am[i]) / (2.0 * sx);
          da_dv(i, j) = (bp[i] - bm[i]) / (2.0 * sv);
        }
      }
      const Matrix eye = Matrix::identity(d);
      sub[b] = (1.0 / (h * h)) * eye + (0.5 / h) * da_dv;
      diag[b] = (-2.0 / (h * h)) * eye - da_dx;
      super[b] = (1.0 / (h * h)) * eye - (0.5 / h) * da_dv;
      rhs[b] = Vec(d);
      for (int i = 0; i < d; ++i) rhs[b][i] = -res(k, i);
    }
    // Block Thomas elimination.
    std::vector<Matrix> diag_inv(blocks);
    for (int b = 0; b < blocks; ++b) {
      if (b > 0) {
        const Matrix factor = sub[b] * diag_inv[b - 1];
        diag[b] -= factor * super[b - 1];
        const Vec carried = factor * rhs[b - 1];
        for (int i = 0; i < d; ++i) rhs[b][i] -= carried[i];
      }
      if (!invert_dense(diag[b], diag_inv[b])) return iterations;
    }
    std::vector<Vec> delta(blocks);
    for (int b = blocks - 1; b >= 0; --b) {
      Vec r = rhs[b];
      if (b + 1 < blocks) {
        const Vec coupling = super[b] * delta[b + 1];
        for (int i = 0; i < d; ++i) r[i] -= coupling[i];
      }
      delta[b] = diag_inv[b] * r;
    }

    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= ctl.max_halvings; ++halving) {
      Path trial = path;
      for (int b = 0; b < blocks; ++b)
        for (int i = 0; i < d; ++i) trial(b + 1, i) += lambda * delta[b][i];
      if (all_finite(trial.values())) {
        const double r = residual_norm(trial);
        if (r < current) {
          path = std::move(trial);
          current = r;
          accepted = true;
          break;
        }
      }
      lambda *= ctl.damping;
    }
    if (!accepted) break;  // stagnated at rounding level or diverging
  }
  return iterations;
}

void validate(const BVProblem& pb) {
  const int d = pb.drift.dim();
  require(pb.n >= 10, ErrorCode::InvalidArgument, "boundary value problem needs n >= 10");
  require(pb.controls.tolerance > 0.0, ErrorCode::InvalidArgument, "solver tolerance must be positive");
  require(pb.controls.damping > 0.0 && pb.controls.damping < 1.0, ErrorCode::InvalidArgument,
          "damping factor must lie in (0, 1)");
  require(pb.controls.max_iterations >= 1, ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  require(static_cast<int>(pb.x0.size()) == d && static_cast<int>(pb.x1.size()) == d, ErrorCode::DimensionMismatch,
          "endpoint dimension does not match the drift");
  require(all_finite(pb.x0) && all_finite(pb.x1), ErrorCode::NonFinite, "endpoints must be finite");
  require(pb.variant != ElVariant::PaperExample || d == 1, ErrorCode::InvalidArgument,
          "the paper-example variant is only defined for d = 1");
}

}  // namespace

BvpSolution solve_el_bvp(const BVProblem& pb) {
  validate(pb);
  const int d = pb.drift.dim();
  const Path guess = initial_guess_path(pb.guess, pb.x0, pb.x1, pb.n);
  Vec v0(d);
  for (int i = 0; i < d; ++i) v0[i] = (-3.0 * guess(0, i) + 4.0 * guess(1, i) - guess(2, i)) * pb.n / 2.0;

  SolveReport report;
  ShootingOutcome shot = shooting_newton(pb, v0);
  report.initial_velocity = shot.velocity;
  report.iterations = shot.iterations;

  auto finish = [&](Path path, const std::string& method) {
    report.iterations += polish_on_grid(pb, path);
    report.method = method;
    report.residual_norm = max_abs(el_residual(pb.drift, path, pb.variant).values());
    double mismatch = 0.0;
    for (int i = 0; i < d; ++i) {
      mismatch = std::max(mismatch, std::abs(path(0, i) - pb.x0[i]));
      mismatch = std::max(mismatch, std::abs(path(pb.n, i) - pb.x1[i]));
    }
    report.boundary_mismatch = mismatch;
    report.converged = report.residual_norm <= pb.controls.tolerance * (1.0 + max_interior(path)) &&
                       all_finite(path.values());
    return path;
  };

  std::optional<Path> result;
  if (shot.path) {
    // The grid polish pins the endpoints to the requested values exactly.
    Path p = std::move(*shot.path);
    for (int i = 0; i < d; ++i) p(pb.n, i) = pb.x1[i];
    result = finish(std::move(p), "shooting");
    if (!report.converged) report.message = "grid polish after shooting did not reach the tolerance";
  } else {
    report.message = shot.message;
  }

  if (!result || !report.converged) {
    const std::string shooting_message = report.message;
    MinimizeOptions opts;
    opts.max_iterations = 20000;
    MinimizeResult seed = minimize_action(pb.drift, pb.x0, pb.x1, pb.n, guess, opts);
    const int shooting_iterations = report.iterations;
    Path fallback = finish(std::move(seed.path), "collocation");
    report.iterations += shooting_iterations;
    if (report.converged || !result) {
      result = std::move(fallback);
      report.message = report.converged ? "shooting failed (" + shooting_message + "); collocation fallback converged"
                                        : shooting_message + "; collocation fallback did not converge";
    }
  }
  report.action = om_action(pb.drift, *result).total;
  return {std::move(*result), std::move(report)};
}

namespace {

/// Solves (1/h) tridiag(-1, 2, -1) s = g per coordinate, over the interior
/// nodes. This is the Riesz map of the discrete Cameron-Martin inner product.
Vec cameron_martin_gradient(const Vec& g, int interior, int d, double h) {
  Vec s(g.size());
  Vec c(interior), r(interior);
  for (int i = 0; i < d; ++i) {
    // Thomas algorithm for the constant tridiagonal matrix (2, -1) / h.
    double denom = 2.0 / h;
    c[0] = (-1.0 / h) / denom;
    r[0] = g[i] / denom;
    for (int k = 1; k < interior; ++k) {
      denom = 2.0 / h - (-1.0 / h) * c[k - 1];
      c[k] = (-1.0 / h) / denom;
      r[k] = (g[k * d + i] - (-1.0 / h) * r[k - 1]) / denom;
    }
    s[(interior - 1) * d + i] = r[interior - 1];
    for (int k = interior - 2; k >= 0; --k) s[k * d + i] = r[k] - c[k] * s[(k + 1) * d + i];
  }
  return s;
}

struct DescentProblem {
  std::function<double(const Path&)> objective;
  std::function<Vec(const Path&)> gradient;
};

void set_interior(Path& p, const Vec& base, const Vec& direction, double scale) {
  const int d = p.dim();
  for (std::size_t c = 0; c < base.size(); ++c) p.values()[d + c] = base[c] + scale * direction[c];
}

Vec interior_of(const Path& p) { return Vec(p.values().begin() + p.dim(), p.values().end() - p.dim()); }

/// Accelerated descent; updates `path` in place and accumulates into report.
void descend(const DescentProblem& pb, Path& path, const MinimizeOptions& opt, int max_iterations,
             MinimizeReport& report) {
  const int d = path.dim();
  const int interior = path.intervals() - 1;
  const double h = path.step();

  Vec x = interior_of(path);
  Vec x_prev = x;
  double fx = pb.objective(path);
  Vec g = pb.gradient(path);
  report.gradient_norm = max_abs(g);
  if (opt.record_history) report.objective_history.push_back(fx);

  Path trial = path;
  double step = 1.0;
  int momentum_age = 1;
  double best_gradient = report.gradient_norm;
  int stalled = 0;  // iterations without a new best gradient norm
  for (int it = 0; it < max_iterations; ++it) {
    if (report.gradient_norm < opt.tolerance) break;
    ++report.iterations;

    const double beta = (momentum_age - 1.0) / (momentum_age + 2.0);
    Vec y = x;
    double fy = fx;
    Vec gy = g;
    if (beta > 0.0) {
      for (std::size_t c = 0; c < y.size(); ++c) y[c] += beta * (x[c] - x_prev[c]);
      set_interior(trial, y, y, 0.0);
      fy = pb.objective(trial);
      gy = pb.gradient(trial);
    }
    const Vec s = cameron_martin_gradient(gy, interior, d, h);
    const double slope = dot(gy, s);
    // Below this the sufficient-decrease test only sees rounding in the
    // objective, so the gradient norm decides instead.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fy));

    double a = std::min(1.0, 2.0 * step);
    bool found = false;
    double f_new = fy;
    std::optional<Vec> g_new;
    for (int halving = 0; halving < 60; ++halving) {
      set_interior(trial, y, s, -a);
      f_new = all_finite(trial.values()) ? pb.objective(trial) : std::numeric_limits<double>::infinity();
      if (std::isfinite(f_new) && f_new <= fy - opt.armijo * a * slope) {
        found = true;
        break;
      }
      if (std::isfinite(f_new) && opt.armijo * a * slope < noise && f_new <= fx) {
        Vec gt = pb.gradient(trial);
        if (max_abs(gt) < report.gradient_norm) {
          g_new = std::move(gt);
          found = true;
          break;
        }
      }
      a *= 0.5;
    }

    if (!found || f_new > fx) {
      if (beta == 0.0) break;  // no descent possible even without momentum
      ++report.restarts;
      momentum_age = 1;
      x_prev = x;
      continue;
    }
    step = a;
    x_prev = x;
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = y[c] - a * s[c];
    set_interior(path, x, x, 0.0);
    fx = f_new;
    g = g_new ? std::move(*g_new) : pb.gradient(path);
    report.gradient_norm = max_abs(g);
    if (opt.record_history) report.objective_history.push_back(fx);
    ++momentum_age;
    if (report.gradient_norm < best_gradient) {
      best_gradient = report.gradient_norm;
      stalled = 0;
    } else if (++stalled >= 200) {
      break;
    }
  }
  report.objective = fx;
}

}  // namespace

MinimizeResult minimize_action(const DriftSpec& spec, std::span<const double> x0, std::span<const double> x1, int n,
                               const std::optional<Path>& init, const MinimizeOptions& options) {
  const int d = spec.dim();
  require(static_cast<int>(x0.size()) == d && static_cast<int>(x1.size()) == d, ErrorCode::DimensionMismatch,
          "endpoint dimension does not match the drift");
  require(all_finite(x0) && all_finite(x1), ErrorCode::NonFinite, "endpoints must be finite");
  require(n >= 3, ErrorCode::InvalidArgument, "minimize_action needs n >= 3");
  require(options.tolerance > 0.0, ErrorCode::InvalidArgument, "minimizer tolerance must be positive");

  Path path = init ? *init : Path::linear(x0, x1, n);
  require(path.dim() == d && path.intervals() == n, ErrorCode::DimensionMismatch,
          "initial path does not match the grid and dimension");
  for (int i = 0; i < d; ++i) {
    path(0, i) = x0[i];
    path(n, i) = x1[i];
  }

  MinimizeReport report;
  if (options.law == LawCoupling::Coupled) {
    DescentProblem pb{[&](const Path& p) { return discrete_objective(spec, p); },
                      [&](const Path& p) { return discrete_action_gradient(spec, p); }};
    descend(pb, path, options, options.max_iterations, report);
    report.converged = report.gradient_norm < options.tolerance;
  } else {
    Path law = path;
    DescentProblem pb{[&](const Path& p) { return -om_action_frozen(spec, p, law).total; },
                      [&](const Path& p) { return discrete_action_gradient_frozen(spec, p, law); }};
    for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
      ++report.outer_iterations;
      const int budget = options.max_iterations - report.iterations;
      if (budget <= 0) break;
      descend(pb, path, options, budget, report);
      const double change = max_abs((path - law).values());
      law = path;
      if (change < options.outer_tolerance) break;
    }
    report.gradient_norm = max_abs(discrete_action_gradient_frozen(spec, path, path));
    report.objective = -om_action_frozen(spec, path, path).total;
    report.converged = report.gradient_norm < options.tolerance;
  }
  return {std::move(path), std::move(report)};
}

std::vector<Candidate> multistart(const DriftSpec& spec, std::span<const double> x0, std::span<const double> x1, int n,
                                  const std::vector<InitialGuess>& guesses, const SolverControls& controls,
                                  ElVariant variant, const MinimizeOptions& minimize_options, int threads) {
  const std::size_t tasks = guesses.size() * 2;
  std::vector<std::optional<Candidate>> slots(tasks);
  parallel_for(tasks, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t task = begin; task < end; ++task) {
      const InitialGuess guess = guesses[task / 2];
      Candidate c;
      c.guess = guess;
      if (task % 2 == 0) {
        BVProblem pb{spec, Vec(x0.begin(), x0.end()), Vec(x1.begin(), x1.end()), n, controls, variant, guess};
        BvpSolution sol = solve_el_bvp(pb);
        c.method = sol.report.method == "shooting" ? "el-shooting" : "el-collocation";
        c.converged = sol.report.converged;
        c.residual_norm = sol.report.residual_norm;
        c.path = std::move(sol.path);
      } else {
        MinimizeResult r = minimize_action(spec, x0, x1, n, initial_guess_path(guess, x0, x1, n), minimize_options);
        c.method = "minimize";
        c.converged = r.report.converged;
        c.residual_norm = r.report.gradient_norm;
        c.path = std::move(r.path);
      }
      c.action = om_action(spec, c.path);
      slots[task] = std::move(c);
    }
  });

  std::vector<Candidate> out;
  for (auto& slot : slots) {
    if (!slot || !slot->converged) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Candidate& other) {
      const bool same_family = (other.method == "minimize") == (slot->method == "minimize");
      return same_family && max_abs((other.path - slot->path).values()) < 1e-6;
    });
    if (!duplicate) out.push_back(std::move(*slot));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.action.total > b.action.total; });
  return out;
}

}  // namespace mvom
