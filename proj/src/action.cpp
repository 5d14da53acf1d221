#include "mvom/action.hpp"

#include <string>

#include "mvom/error.hpp"

namespace mvom {

namespace {

void check_path(const DriftSpec& spec, const Path& path, const Path* law_path) {
  require(path.dim() == spec.dim(), ErrorCode::DimensionMismatch,
          "path dimension " + std::to_string(path.dim()) + " does not match drift dimension " +
              std::to_string(spec.dim()));
  if (law_path)
    require(law_path->dim() == path.dim() && law_path->intervals() == path.intervals(),
            ErrorCode::DimensionMismatch, "law path lives on a different grid");
}

Vec midpoint(std::span<const double> a, std::span<const double> b) {
  Vec m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return m;
}

/// Jet at (t, x) with the law at the point mass `law_point`, or at x itself
/// when law_point is empty.
DriftJet jet_at(const DriftSpec& spec, double t, std::span<const double> x, std::span<const double> law_point) {
  if (law_point.empty()) return dirac_jet(spec, t, x);
  return drift_jet(spec, t, x, spec.moments_dirac(t, law_point));
}

OMResult evaluate(const DriftSpec& spec, const Path& path, const Path* law_path) {
  check_path(spec, path, law_path);
  const int n = path.intervals();
  const int d = path.dim();
  const double h = path.step();

  double kinetic_sum = 0.0;
  Vec f(d);
  for (int k = 0; k < n; ++k) {
    const Vec xm = midpoint(path.at(k), path.at(k + 1));
    const double tm = (k + 0.5) * h;
    LawMoments law = law_path ? spec.moments_dirac(tm, midpoint(law_path->at(k), law_path->at(k + 1)))
                              : spec.moments_dirac(tm, xm);
    spec.eval(tm, xm, law.value, f);
    for (int i = 0; i < d; ++i) {
      const double r = (path(k + 1, i) - path(k, i)) / h - f[i];
      kinetic_sum += r * r;
    }
  }

  Vec div(path.nodes());
  for (int k = 0; k <= n; ++k)
    div[k] = jet_at(spec, path.time(k), path.at(k), law_path ? law_path->at(k) : std::span<const double>{}).div;

  OMResult out;
  out.kinetic = -0.5 * h * kinetic_sum;
  out.divergence = -0.5 * quadrature(div);
  out.total = out.kinetic + out.divergence;
  out.n = n;
  require(std::isfinite(out.total), ErrorCode::NonFinite, "OM action is not finite along the path");
  return out;
}

Vec gradient(const DriftSpec& spec, const Path& path, const Path* law_path) {
  check_path(spec, path, law_path);
  const int n = path.intervals();
  const int d = path.dim();
  const double h = path.step();
  Vec grad(static_cast<std::size_t>(n - 1) * d, 0.0);

  // Interval terms: r_k = v_k - F(x_mid), with dF/dx_k = dF/dx_{k+1} = J/2.
  for (int k = 0; k < n; ++k) {
    const Vec xm = midpoint(path.at(k), path.at(k + 1));
    const double tm = (k + 0.5) * h;
    Vec law_point;
    if (law_path) law_point = midpoint(law_path->at(k), law_path->at(k + 1));
    const DriftJet jet = jet_at(spec, tm, xm, law_point);
    Matrix jac = jet.grad_x;
    if (!law_path) jac += jet.l_derivative;

    Vec r(d);
    for (int i = 0; i < d; ++i) r[i] = (path(k + 1, i) - path(k, i)) / h - jet.f[i];
    Vec jtr = jac.transposed() * r;
    // Left node k (interior when k >= 1), right node k + 1 (interior when k + 1 <= n - 1).
    if (k >= 1)
      for (int i = 0; i < d; ++i) grad[(k - 1) * d + i] += -r[i] - 0.5 * h * jtr[i];
    if (k + 1 <= n - 1)
      for (int i = 0; i < d; ++i) grad[k * d + i] += r[i] - 0.5 * h * jtr[i];
  }

  // Node terms of the trapezoid divergence integral (interior weight h).
  for (int k = 1; k < n; ++k) {
    const DriftJet jet = jet_at(spec, path.time(k), path.at(k), law_path ? law_path->at(k) : std::span<const double>{});
    for (int i = 0; i < d; ++i) {
      double g = jet.grad_div[i];
      if (!law_path) g += jet.l_derivative_div[i];
      grad[(k - 1) * d + i] += 0.5 * h * g;
    }
  }
  require(all_finite(grad), ErrorCode::NonFinite, "action gradient is not finite along the path");
  return grad;
}

}  // namespace

OMResult om_action(const DriftSpec& spec, const Path& path) { return evaluate(spec, path, nullptr); }

OMResult om_action_frozen(const DriftSpec& spec, const Path& path, const Path& law_path) {
  return evaluate(spec, path, &law_path);
}

double discrete_objective(const DriftSpec& spec, const Path& path) { return -om_action(spec, path).total; }

Vec discrete_action_gradient(const DriftSpec& spec, const Path& path) { return gradient(spec, path, nullptr); }

Vec discrete_action_gradient_frozen(const DriftSpec& spec, const Path& path, const Path& law_path) {
  return gradient(spec, path, &law_path);
}

}  // namespace mvom
