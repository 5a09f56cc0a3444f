#include "pmvf/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace pmvf {

namespace {

// LU factorization with partial pivoting on a working copy.
// Returns false when the matrix is numerically singular.
bool lu_factor(Mat& a, std::array<int, kMaxDim>& perm, double& det_sign) {
  const int n = a.size();
  det_sign = 1.0;
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a(row, col)) > std::abs(a(piv, col))) piv = row;
    if (a(piv, col) == 0.0) return false;
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      std::swap(perm[piv], perm[col]);
      det_sign = -det_sign;
    }
    for (int row = col + 1; row < n; ++row) {
      const double f = a(row, col) / a(col, col);
      a(row, col) = f;
      for (int j = col + 1; j < n; ++j) a(row, j) -= f * a(col, j);
    }
  }
  return true;
}

}  // namespace

double determinant(const Mat& a) {
  Mat lu = a;
  std::array<int, kMaxDim> perm;
  double sign;
  if (!lu_factor(lu, perm, sign)) return 0.0;
  double d = sign;
  for (int i = 0; i < a.size(); ++i) d *= lu(i, i);
  return d;
}

Mat inverse(const Mat& a) {
  const int n = a.size();
  Mat lu = a;
  std::array<int, kMaxDim> perm;
  double sign;
  if (!lu_factor(lu, perm, sign)) throw std::invalid_argument("inverse: singular matrix");
  Mat inv(n);
  for (int rhs = 0; rhs < n; ++rhs) {
    // Solve A x = e_rhs using the pivoted factors.
    std::array<double, kMaxDim> y{};
    for (int i = 0; i < n; ++i) {
      double s = (perm[i] == rhs) ? 1.0 : 0.0;
      for (int j = 0; j < i; ++j) s -= lu(i, j) * y[j];
      y[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = y[i];
      for (int j = i + 1; j < n; ++j) s -= lu(i, j) * inv(j, rhs);
      inv(i, rhs) = s / lu(i, i);
    }
  }
  return inv;
}

}  // namespace pmvf
