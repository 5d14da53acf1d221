#include "mvom/linalg.hpp"

#include <utility>

namespace mvom {

bool solve_dense(Matrix a, Vec& b) {
  const int n = a.rows();
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0 || !std::isfinite(a(pivot, col))) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
      b[r] -= factor * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a(r, c) * b[c];
    b[r] = s / a(r, r);
  }
  return true;
}

bool invert_dense(const Matrix& a, Matrix& inverse) {
  const int n = a.rows();
  inverse = Matrix(n, n);
  for (int col = 0; col < n; ++col) {
    Vec e(n, 0.0);
    e[col] = 1.0;
    if (!solve_dense(a, e)) return false;
    for (int r = 0; r < n; ++r) inverse(r, col) = e[r];
  }
  return true;
}

}  // namespace mvom
