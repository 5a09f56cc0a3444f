#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace pmvf {

// Spatial dimension is tiny (N <= 3) throughout; fixed-capacity value types
// keep the hot loops allocation-free.
inline constexpr int kMaxDim = 3;

class Vec {
 public:
  Vec() = default;
  explicit Vec(int n, double fill = 0.0) : n_(n) {
    check_dim(n);
    for (int i = 0; i < n; ++i) v_[i] = fill;
  }
  Vec(std::initializer_list<double> xs) : n_(static_cast<int>(xs.size())) {
    check_dim(n_);
    int i = 0;
    for (double x : xs) v_[i++] = x;
  }

  int size() const { return n_; }
  double& operator[](int i) { return v_[i]; }
  double operator[](int i) const { return v_[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) v_[i] += o.v_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n_; ++i) v_[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < n_; ++i) s += v_[i] * v_[i];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  bool all_finite() const {
    for (int i = 0; i < n_; ++i)
      if (!std::isfinite(v_[i])) return false;
    return true;
  }

 private:
  static void check_dim(int n) {
    if (n < 0 || n > kMaxDim) throw std::invalid_argument("Vec: dimension must be in [0," + std::to_string(kMaxDim) + "]");
  }
  std::array<double, kMaxDim> v_{};
  int n_ = 0;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Dense square matrix, n <= 3.
class Mat {
 public:
  Mat() = default;
  explicit Mat(int n, double fill = 0.0) : n_(n) {
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("Mat: bad dimension");
    for (auto& x : v_) x = fill;
  }
  static Mat identity(int n) {
    Mat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diagonal(const Vec& d) {
    Mat m(d.size());
    for (int i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  int size() const { return n_; }
  double& operator()(int i, int j) { return v_[i * kMaxDim + j]; }
  double operator()(int i, int j) const { return v_[i * kMaxDim + j]; }

  Mat& operator-=(const Mat& o) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(i, j) -= o(i, j);
    return *this;
  }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  Mat& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  Vec apply(const Vec& x) const {
    Vec y(n_);
    for (int i = 0; i < n_; ++i) {
      double s = 0;
      for (int j = 0; j < n_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  double max_asymmetry() const {
    double worst = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
    return worst;
  }

 private:
  std::array<double, kMaxDim * kMaxDim> v_{};
  int n_ = 0;
};

// Gaussian elimination with partial pivoting; fine at n <= 3.
Mat inverse(const Mat& a);
double determinant(const Mat& a);

inline double quad_form(const Mat& a, const Vec& x) { return dot(a.apply(x), x); }

struct SpaceTimePoint {
  Vec x;
  double t = 0.0;

  int dim() const { return x.size(); }
  bool all_finite() const { return x.all_finite() && std::isfinite(t); }
};

inline SpaceTimePoint make_point(std::initializer_list<double> xs, double t) { return SpaceTimePoint{Vec(xs), t}; }

// Axis-aligned box in space-time: [lo_i, hi_i] x [t_lo, t_hi].
struct Box {
  Vec x_lo, x_hi;
  double t_lo = 0.0, t_hi = 0.0;

  int dim() const { return x_lo.size(); }
  double volume() const {
    double v = t_hi - t_lo;
    for (int i = 0; i < dim(); ++i) v *= (x_hi[i] - x_lo[i]);
    return v;
  }
  bool contains(const SpaceTimePoint& z) const {
    if (z.t < t_lo || z.t > t_hi) return false;
    for (int i = 0; i < dim(); ++i)
      if (z.x[i] < x_lo[i] || z.x[i] > x_hi[i]) return false;
    return true;
  }
};

}  // namespace pmvf
