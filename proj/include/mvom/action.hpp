#pragma once

#include "mvom/drift.hpp"
#include "mvom/path.hpp"

namespace mvom {

/// Onsager-Machlup functional split into its two integrals.
struct OMResult {
  double kinetic = 0.0;     // -1/2 int |phi' - f(t, phi, delta_phi)|^2 dt, never positive
  double divergence = 0.0;  // -1/2 int div_x f(t, phi, delta_phi) dt
  double total = 0.0;       // kinetic + divergence
  int n = 0;
};

/// OM functional along `path`, with the law at time t taken as the point mass
/// at the path itself.
///
/// Discretisation: the kinetic integral is a midpoint rule over grid
/// intervals, using the secant slope (x_{k+1} - x_k) / h and f evaluated at
/// the interval midpoint; the divergence integral is the trapezoid rule over
/// nodes. Both are second order, and the secant form gives the discrete
/// objective no odd/even null mode, so its minimisers are smooth.
OMResult om_action(const DriftSpec& spec, const Path& path);

/// Same functional with the law frozen along `law_path` (the law at t is the
/// point mass at law_path(t)) instead of following `path`.
OMResult om_action_frozen(const DriftSpec& spec, const Path& path, const Path& law_path);

/// The quantity minimised when searching for most probable paths: -total.
double discrete_objective(const DriftSpec& spec, const Path& path);

/// Exact gradient of discrete_objective with respect to the interior node
/// values (endpoints held fixed), row-major (n - 1) x d.
Vec discrete_action_gradient(const DriftSpec& spec, const Path& path);
Vec discrete_action_gradient_frozen(const DriftSpec& spec, const Path& path, const Path& law_path);

}  // namespace mvom
