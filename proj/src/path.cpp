#include "mvom/path.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mvom/error.hpp"

namespace mvom {

Path::Path(int dim, int intervals, std::vector<double> values)
    : dim_(dim), intervals_(intervals), values_(std::move(values)) {
  require(dim_ >= 1, ErrorCode::InvalidArgument, "path dimension must be >= 1");
  require(intervals_ >= 2, ErrorCode::InvalidArgument,
          "path needs at least 2 intervals, got " + std::to_string(intervals_));
  require(values_.size() == static_cast<std::size_t>(nodes()) * dim_, ErrorCode::InvalidArgument,
          "path value count does not match grid");
  require(all_finite(values_), ErrorCode::NonFinite, "path value is not finite");
}

Path Path::zeros(int dim, int intervals) {
  return Path(dim, intervals, std::vector<double>(static_cast<std::size_t>(intervals + 1) * dim, 0.0));
}

Path Path::from_function(int dim, int intervals, const std::function<void(double, std::span<double>)>& fn) {
  std::vector<double> values(static_cast<std::size_t>(intervals + 1) * dim);
  for (int k = 0; k <= intervals; ++k)
    fn(static_cast<double>(k) / intervals, std::span<double>(values).subspan(k * dim, dim));
  return Path(dim, intervals, std::move(values));
}

Path Path::from_scalar_function(int intervals, const std::function<double(double)>& fn) {
  return from_function(1, intervals, [&](double t, std::span<double> x) { x[0] = fn(t); });
}

Path Path::linear(std::span<const double> from, std::span<const double> to, int intervals) {
  require(from.size() == to.size(), ErrorCode::DimensionMismatch, "linear path endpoints differ in dimension");
  return from_function(static_cast<int>(from.size()), intervals, [&](double t, std::span<double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - t) * from[i] + t * to[i];
  });
}

Path Path::operator-(const Path& other) const {
  require(dim_ == other.dim_ && intervals_ == other.intervals_, ErrorCode::DimensionMismatch,
          "paths live on different grids");
  std::vector<double> diff(values_.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = values_[i] - other.values_[i];
  return Path(dim_, intervals_, std::move(diff));
}

Vec Path::coordinate(int i) const {
  Vec out(nodes());
  for (int k = 0; k < nodes(); ++k) out[k] = (*this)(k, i);
  return out;
}

NormKind NormKind::holder(double alpha) {
  require(alpha > 0.0 && alpha < 0.25, ErrorCode::InvalidArgument,
          "Hoelder exponent must lie in (0, 1/4), got " + std::to_string(alpha));
  return {Type::Holder, alpha};
}

NormKind NormKind::lp(double p) {
  require(p > 4.0 && std::isfinite(p), ErrorCode::InvalidArgument, "Lp exponent must exceed 4, got " + std::to_string(p));
  return {Type::Lp, p};
}

std::string NormKind::to_string() const {
  std::ostringstream os;
  os << std::setprecision(17);
  switch (type) {
    case Type::Sup:
      return "sup";
    case Type::Holder:
      os << "holder:" << parameter;
      return os.str();
    case Type::Lp:
      os << "lp:" << parameter;
      return os.str();
    case Type::L2:
      return "l2";
  }
  return "unknown";
}

NormKind NormKind::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  auto parameter = [&]() {
    require(colon != std::string::npos, ErrorCode::InvalidArgument, "norm '" + name + "' needs a parameter");
    const std::string arg = text.substr(colon + 1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), value);
    require(ec == std::errc() && ptr == arg.data() + arg.size(), ErrorCode::InvalidArgument,
            "bad norm parameter '" + arg + "'");
    return value;
  };
  if (name == "sup" && colon == std::string::npos) return sup();
  if (name == "l2" && colon == std::string::npos) return l2();
  if (name == "holder") return holder(parameter());
  if (name == "lp") return lp(parameter());
  fail(ErrorCode::InvalidArgument, "unknown norm '" + text + "'");
}

Path derivative(const Path& path) {
  const int n = path.intervals();
  const int d = path.dim();
  const double h = path.step();
  Path out = Path::zeros(d, n);
  for (int i = 0; i < d; ++i) {
    out(0, i) = (-3.0 * path(0, i) + 4.0 * path(1, i) - path(2, i)) / (2.0 * h);
    for (int k = 1; k < n; ++k) out(k, i) = (path(k + 1, i) - path(k - 1, i)) / (2.0 * h);
    out(n, i) = (3.0 * path(n, i) - 4.0 * path(n - 1, i) + path(n - 2, i)) / (2.0 * h);
  }
  return out;
}

double quadrature(std::span<const double> values) {
  require(values.size() >= 2, ErrorCode::InvalidArgument, "quadrature needs at least two nodes");
  const std::size_t n = values.size() - 1;
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k < n; ++k) s += values[k];
  return s / static_cast<double>(n);
}

namespace detail {

namespace {

double node_norm(std::span<const double> values, int dim, int k) {
  if (dim == 1) return std::abs(values[k]);
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += values[k * dim + i] * values[k * dim + i];
  return std::sqrt(s);
}

double node_distance(std::span<const double> values, int dim, int j, int k) {
  if (dim == 1) return std::abs(values[k] - values[j]);
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double diff = values[k * dim + i] - values[j * dim + i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace

double norm_of(std::span<const double> values, int dim, int intervals, const NormKind& kind, bool* approximate) {
  const int nodes = intervals + 1;
  if (approximate) *approximate = false;
  switch (kind.type) {
    case NormKind::Type::Sup: {
      double m = 0.0;
      for (int k = 0; k < nodes; ++k) m = std::max(m, node_norm(values, dim, k));
      return m;
    }
    case NormKind::Type::Holder: {
      double sup = 0.0;
      for (int k = 0; k < nodes; ++k) sup = std::max(sup, node_norm(values, dim, k));
      const double h = 1.0 / intervals;
      double semi = 0.0;
      auto visit_gap = [&](int gap) {
        const double scale = std::pow(gap * h, -kind.parameter);
        for (int j = 0; j + gap < nodes; ++j) semi = std::max(semi, node_distance(values, dim, j, j + gap) * scale);
      };
      if (intervals <= kHolderFullPairLimit) {
        for (int gap = 1; gap <= intervals; ++gap) visit_gap(gap);
      } else {
        for (int gap = 1; gap <= intervals; gap *= 2) visit_gap(gap);
        visit_gap(intervals);
        if (approximate) *approximate = true;
      }
      return sup + semi;
    }
    case NormKind::Type::Lp:
    case NormKind::Type::L2: {
      const double p = kind.type == NormKind::Type::L2 ? 2.0 : kind.parameter;
      double s = 0.0;
      for (int k = 0; k < nodes; ++k) {
        const double w = (k == 0 || k == intervals) ? 0.5 : 1.0;
        const double v = node_norm(values, dim, k);
        s += w * (p == 2.0 ? v * v : std::pow(v, p));
      }
      return std::pow(s / intervals, 1.0 / p);
    }
  }
  return 0.0;
}

}  // namespace detail

NormValue norm(const Path& path, const NormKind& kind) {
  NormValue out;
  out.value = detail::norm_of(path.values(), path.dim(), path.intervals(), kind, &out.approximate);
  return out;
}

double cm_inner(const Path& h1, const Path& h2) {
  require(h1.dim() == h2.dim() && h1.intervals() == h2.intervals(), ErrorCode::DimensionMismatch,
          "cm_inner: paths live on different grids");
  constexpr double kOriginTolerance = 1e-12;
  require(max_abs(h1.at(0)) <= kOriginTolerance && max_abs(h2.at(0)) <= kOriginTolerance,
          ErrorCode::InvalidArgument, "cm_inner: Cameron-Martin paths must start at 0");
  const Path d1 = derivative(h1);
  const Path d2 = derivative(h2);
  Vec products(h1.nodes());
  for (int k = 0; k < h1.nodes(); ++k) products[k] = dot(d1.at(k), d2.at(k));
  return quadrature(products);
}

void write_csv(std::ostream& out, const Path& path) {
  out << "t";
  for (int i = 0; i < path.dim(); ++i) out << ",x" << (i + 1);
  out << '\n' << std::setprecision(17);
  for (int k = 0; k < path.nodes(); ++k) {
    out << path.time(k);
    for (int i = 0; i < path.dim(); ++i) out << ',' << path(k, i);
    out << '\n';
  }
}

void write_csv(const std::string& file, const Path& path) {
  std::ofstream out(file);
  require(out.good(), ErrorCode::Io, "cannot open '" + file + "' for writing");
  write_csv(out, path);
}

Path read_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Io, "path CSV is empty");
  int dim = 0;
  {
    std::istringstream header(line);
    std::string field;
    std::getline(header, field, ',');
    require(field == "t", ErrorCode::Io, "path CSV header must start with 't'");
    while (std::getline(header, field, ',')) {
      ++dim;
      require(field == "x" + std::to_string(dim), ErrorCode::Io, "unexpected path CSV column '" + field + "'");
    }
  }
  require(dim >= 1, ErrorCode::Io, "path CSV has no coordinate columns");
  std::vector<double> values;
  std::vector<double> times;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    int column = 0;
    while (std::getline(row, field, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      require(ec == std::errc(), ErrorCode::Io, "bad number '" + field + "' in path CSV row " + std::to_string(rows + 2));
      if (column == 0)
        times.push_back(v);
      else
        values.push_back(v);
      ++column;
    }
    require(column == dim + 1, ErrorCode::Io, "path CSV row " + std::to_string(rows + 2) + " has wrong column count");
    ++rows;
  }
  require(rows >= 3, ErrorCode::Io, "path CSV needs at least 3 rows");
  // Times are implied by the grid; the column must describe the same grid.
  for (int k = 0; k < rows; ++k)
    require(std::abs(times[k] - static_cast<double>(k) / (rows - 1)) <= 1e-12, ErrorCode::Io,
            "path CSV times are not the uniform grid on [0, 1]");
  return Path(dim, rows - 1, std::move(values));
}

Path read_csv(const std::string& file) {
  std::ifstream in(file);
  require(in.good(), ErrorCode::Io, "cannot open '" + file + "'");
  return read_csv(in);
}

}  // namespace mvom
