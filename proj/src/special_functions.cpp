#include "pmvf/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmvf {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;

// Regularized P(s,w) by power series, valid/fast for w < s+1.
double gamma_p_series(double s, double w) {
  double ap = s;
  double sum = 1.0 / s;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= w / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-w + s * std::log(w) - std::lgamma(s));
}

// Regularized Q(s,w) = 1 - P by modified Lentz continued fraction, w >= s+1.
double gamma_q_contfrac(double s, double w) {
  const double tiny = std::numeric_limits<double>::min() / kEps;
  double b = w + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h * std::exp(-w + s * std::log(w) - std::lgamma(s));
}

}  // namespace

double gamma_lower_incomplete(double s, double w) {
  if (!(s > 0.0)) throw std::invalid_argument("gamma_lower_incomplete: s must be > 0");
  if (w < 0.0) throw std::invalid_argument("gamma_lower_incomplete: w must be >= 0");
  if (w == 0.0) return 0.0;
  const double gamma_s = std::exp(std::lgamma(s));
  if (!std::isfinite(w)) return gamma_s;
  if (w < s + 1.0) return gamma_p_series(s, w) * gamma_s;
  return (1.0 - gamma_q_contfrac(s, w)) * gamma_s;
}

double unit_ball_volume(int m) {
  if (m < 0) throw std::invalid_argument("unit_ball_volume: m must be >= 0");
  const double pi = 3.14159265358979323846;
  return std::pow(pi, 0.5 * m) / std::exp(std::lgamma(0.5 * m + 1.0));
}

}  // namespace pmvf
