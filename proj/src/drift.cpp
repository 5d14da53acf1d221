#include "mvom/drift.hpp"

#include <string>

#include "mvom/error.hpp"

namespace mvom {

const char* to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::PolySeparable1D:
      return "poly_separable_1d";
    case DriftKind::LinearMeanField:
      return "linear_mean_field";
    case DriftKind::DistributionFree:
      return "distribution_free";
  }
  return "unknown";
}

namespace {

void check_dim(const DriftSpec& spec, std::size_t size, const char* what) {
  require(static_cast<int>(size) == spec.dim(), ErrorCode::DimensionMismatch,
          std::string(what) + " has dimension " + std::to_string(size) + ", drift dimension is " +
              std::to_string(spec.dim()));
}

void check_measure(const DriftSpec& spec, const Measure& mu) {
  require(mu.dim() == spec.dim(), ErrorCode::DimensionMismatch,
          "measure dimension " + std::to_string(mu.dim()) + " does not match drift dimension " +
              std::to_string(spec.dim()));
}

}  // namespace

DriftSpec DriftSpec::poly_separable_1d(std::vector<Coefficients> local, std::vector<SeparableKernel> kernels,
                                       int max_degree) {
  DriftSpec spec(DriftKind::PolySeparable1D, 1);
  std::vector<Monomial> terms;
  for (std::size_t j = 0; j < local.size(); ++j)
    for (std::size_t k = 0; k < local[j].size(); ++k)
      terms.push_back(Monomial{local[j][k], static_cast<int>(j), {static_cast<int>(k)}});
  spec.local_.emplace_back(Polynomial(1, std::move(terms)));
  for (const auto& kernel : kernels) {
    const int m = static_cast<int>(spec.features_.size());
    spec.features_.emplace_back(Polynomial::univariate_in_x(1, 0, kernel.inner));
    spec.interactions_.push_back({0, PolynomialJet(Polynomial::univariate_in_x(1, 0, kernel.outer)), m});
  }
  spec.validate(max_degree);
  return spec;
}

DriftSpec DriftSpec::linear_mean_field(int dim, TimePolyMatrix a, std::vector<Coefficients> b, TimePolyMatrix c,
                                       int max_degree) {
  require(dim >= 1, ErrorCode::InvalidArgument, "drift dimension must be >= 1");
  auto check_matrix = [dim](const TimePolyMatrix& m, const char* name) {
    require(m.empty() || static_cast<int>(m.size()) == dim, ErrorCode::DimensionMismatch,
            std::string(name) + " must have " + std::to_string(dim) + " rows");
    for (const auto& row : m)
      require(static_cast<int>(row.size()) == dim, ErrorCode::DimensionMismatch,
              std::string(name) + " must have " + std::to_string(dim) + " columns");
  };
  check_matrix(a, "A");
  check_matrix(c, "C");
  require(b.empty() || static_cast<int>(b.size()) == dim, ErrorCode::DimensionMismatch,
          "b must have " + std::to_string(dim) + " entries");

  DriftSpec spec(DriftKind::LinearMeanField, dim);
  for (int k = 0; k < dim; ++k) {
    Polynomial p(dim);
    if (!b.empty()) p += Polynomial::univariate_in_t(dim, b[k]);
    if (!a.empty())
      for (int j = 0; j < dim; ++j) {
        Vec unit(2, 0.0);
        unit[1] = 1.0;
        p += Polynomial::univariate_in_t(dim, a[k][j]) * Polynomial::univariate_in_x(dim, j, unit);
      }
    spec.local_.emplace_back(std::move(p));
  }
  // Features are the coordinates y_j; only the ones some C entry reads.
  std::vector<int> feature_of(dim, -1);
  if (!c.empty())
    for (int k = 0; k < dim; ++k)
      for (int j = 0; j < dim; ++j) {
        Polynomial q = Polynomial::univariate_in_t(dim, c[k][j]);
        if (q.is_zero()) continue;
        if (feature_of[j] < 0) {
          feature_of[j] = static_cast<int>(spec.features_.size());
          const double unit[] = {0.0, 1.0};
          spec.features_.emplace_back(Polynomial::univariate_in_x(dim, j, unit));
        }
        spec.interactions_.push_back({k, PolynomialJet(std::move(q)), feature_of[j]});
      }
  spec.validate(max_degree);
  return spec;
}

DriftSpec DriftSpec::distribution_free(int dim, std::vector<Polynomial> components, int max_degree) {
  require(dim >= 1, ErrorCode::InvalidArgument, "drift dimension must be >= 1");
  require(static_cast<int>(components.size()) == dim, ErrorCode::DimensionMismatch,
          "distribution-free drift needs " + std::to_string(dim) + " components");
  DriftSpec spec(DriftKind::DistributionFree, dim);
  for (auto& p : components) {
    if (p.dim() == 0 && p.is_zero()) p = Polynomial(dim);
    require(p.dim() == dim, ErrorCode::DimensionMismatch, "drift component polynomial has wrong dimension");
    spec.local_.emplace_back(std::move(p));
  }
  spec.validate(max_degree);
  return spec;
}

void DriftSpec::validate(int max_degree) const {
  for (const auto& p : local_) {
    require(p.value.coefficients_finite(), ErrorCode::InvalidArgument, "drift coefficient is not finite");
    require(p.value.total_degree() <= max_degree, ErrorCode::InvalidArgument,
            "drift degree " + std::to_string(p.value.total_degree()) + " exceeds maximum " +
                std::to_string(max_degree));
  }
  for (const auto& term : interactions_) {
    const auto& feature = features_[term.feature].value;
    require(term.outer.value.coefficients_finite() && feature.coefficients_finite(), ErrorCode::InvalidArgument,
            "drift coefficient is not finite");
    const int degree = term.outer.value.total_degree() + feature.total_degree();
    require(degree <= max_degree, ErrorCode::InvalidArgument,
            "mean-field kernel degree " + std::to_string(degree) + " exceeds maximum " + std::to_string(max_degree));
  }
}

LawMoments DriftSpec::moments(double t, const Measure& mu) const {
  check_measure(*this, mu);
  const std::size_t count = features_.size();
  LawMoments out{Vec(count, 0.0), Vec(count, 0.0), Vec(count * dim_, 0.0)};
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const double w = mu.weights()[a];
    auto y = mu.atom(a);
    for (std::size_t m = 0; m < count; ++m) {
      const auto& r = features_[m];
      out.value[m] += w * r.value(t, y);
      out.time_derivative[m] += w * r.dt(t, y);
      for (int i = 0; i < dim_; ++i) out.gradient[m * dim_ + i] += w * r.dx[i](t, y);
    }
  }
  return out;
}

LawMoments DriftSpec::moments_dirac(double t, std::span<const double> y) const {
  check_dim(*this, y.size(), "point");
  const std::size_t count = features_.size();
  LawMoments out{Vec(count), Vec(count), Vec(count * dim_)};
  for (std::size_t m = 0; m < count; ++m) {
    const auto& r = features_[m];
    out.value[m] = r.value(t, y);
    out.time_derivative[m] = r.dt(t, y);
    for (int i = 0; i < dim_; ++i) out.gradient[m * dim_ + i] = r.dx[i](t, y);
  }
  return out;
}

Vec DriftSpec::moment_values_uniform(double t, std::span<const double> points) const {
  const std::size_t count = points.size() / dim_;
  Vec out(features_.size(), 0.0);
  for (std::size_t m = 0; m < features_.size(); ++m) {
    double s = 0.0;
    for (std::size_t a = 0; a < count; ++a) s += features_[m].value(t, points.subspan(a * dim_, dim_));
    out[m] = s / static_cast<double>(count);
  }
  return out;
}

void DriftSpec::eval(double t, std::span<const double> x, std::span<const double> moment_values,
                     std::span<double> out) const {
  for (int k = 0; k < dim_; ++k) out[k] = local_[k].value(t, x);
  for (const auto& term : interactions_) out[term.component] += term.outer.value(t, x) * moment_values[term.feature];
}

DriftJet drift_jet(const DriftSpec& spec, double t, std::span<const double> x, const LawMoments& law) {
  check_dim(spec, x.size(), "state");
  const int d = spec.dim();
  DriftJet jet{Vec(d, 0.0), Matrix(d, d), Vec(d, 0.0), Vec(d, 0.0), 0.0, Vec(d, 0.0), Matrix(d, d), Vec(d, 0.0)};

  for (int k = 0; k < d; ++k) {
    const auto& p = spec.local()[k];
    jet.f[k] = p.value(t, x);
    jet.dt[k] = p.dt(t, x);
    for (int i = 0; i < d; ++i) {
      jet.grad_x(k, i) = p.dx[i](t, x);
      jet.laplacian[k] += p.dxx[i][i](t, x);
      jet.grad_div[i] += p.dxx[k][i](t, x);
    }
  }
  for (const auto& term : spec.interactions()) {
    const int k = term.component;
    const auto& q = term.outer;
    const double moment = law.value[term.feature];
    const double qv = q.value(t, x);
    jet.f[k] += qv * moment;
    jet.dt[k] += q.dt(t, x) * moment + qv * law.time_derivative[term.feature];
    for (int i = 0; i < d; ++i) {
      const double grad_r = law.gradient[term.feature * d + i];
      jet.grad_x(k, i) += q.dx[i](t, x) * moment;
      jet.laplacian[k] += q.dxx[i][i](t, x) * moment;
      jet.grad_div[i] += q.dxx[k][i](t, x) * moment;
      jet.l_derivative(k, i) += qv * grad_r;
      jet.l_derivative_div[i] += q.dx[k](t, x) * grad_r;
    }
  }
  for (int k = 0; k < d; ++k) jet.div += jet.grad_x(k, k);
  return jet;
}

DriftJet dirac_jet(const DriftSpec& spec, double t, std::span<const double> x) {
  return drift_jet(spec, t, x, spec.moments_dirac(t, x));
}

Vec eval_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu) {
  check_dim(spec, x.size(), "state");
  const LawMoments law = spec.moments(t, mu);
  Vec out(spec.dim());
  spec.eval(t, x, law.value, out);
  return out;
}

Matrix grad_x_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu) {
  return drift_jet(spec, t, x, spec.moments(t, mu)).grad_x;
}

Vec laplacian_trace_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu) {
  return drift_jet(spec, t, x, spec.moments(t, mu)).laplacian;
}

Vec dt_f(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu) {
  return drift_jet(spec, t, x, spec.moments(t, mu)).dt;
}

double divergence_x(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu) {
  return drift_jet(spec, t, x, spec.moments(t, mu)).div;
}

Matrix l_derivative(const DriftSpec& spec, double t, std::span<const double> x, const Measure& mu,
                    std::span<const double> y) {
  check_measure(spec, mu);
  check_dim(spec, y.size(), "l_derivative point");
  // The kernel family's Lions derivative does not depend on mu itself.
  return drift_jet(spec, t, x, spec.moments_dirac(t, y)).l_derivative;
}

Vec mean_field_time_term(const DriftSpec& spec, double t, std::span<const double> phi,
                         std::span<const double> phidot, const Measure& mu) {
  check_dim(spec, phidot.size(), "velocity");
  const Matrix l = drift_jet(spec, t, phi, spec.moments(t, mu)).l_derivative;
  return l * phidot;
}

namespace models {

DriftSpec zero(int dim) { return DriftSpec::distribution_free(dim, std::vector<Polynomial>(dim, Polynomial(dim))); }

DriftSpec ornstein_uhlenbeck(double rate, int dim) {
  std::vector<Polynomial> components;
  for (int k = 0; k < dim; ++k) {
    const double coeffs[] = {0.0, -rate};
    components.push_back(Polynomial::univariate_in_x(dim, k, coeffs));
  }
  return DriftSpec::distribution_free(dim, std::move(components));
}

DriftSpec bistable_mean_field() {
  return DriftSpec::poly_separable_1d({}, {{{0.0, 1.0, 0.0, -1.0}, {0.0, 1.0}}});
}

DriftSpec mean_attraction() { return DriftSpec::poly_separable_1d({}, {{{1.0}, {0.0, 1.0}}}); }

}  // namespace models

}  // namespace mvom
