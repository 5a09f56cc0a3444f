#include "pmvf/fundamental_solution.hpp"

#include <cmath>
#include <stdexcept>

namespace pmvf {

double GammaField::gap_checked(const SpaceTimePoint& z) const {
  const double gap = pole().t - z.t;
  if (!(gap > 0.0)) throw std::domain_error("GammaField: requires t < t0");
  return gap;
}

double GammaField::log_value(const SpaceTimePoint& z) const {
  const double v = value(z);
  if (!(v > 0.0)) throw std::runtime_error("GammaField: non-positive value, cannot take log");
  return std::log(v);
}

Vec GammaField::grad_x(const SpaceTimePoint& z) const {
  const double h = 1e-5 * (1.0 + z.x.norm());
  Vec g(dim());
  SpaceTimePoint zp = z, zm = z;
  for (int i = 0; i < dim(); ++i) {
    zp.x[i] = z.x[i] + h;
    zm.x[i] = z.x[i] - h;
    g[i] = (value(zp) - value(zm)) / (2.0 * h);
    zp.x[i] = z.x[i];
    zm.x[i] = z.x[i];
  }
  return g;
}

double GammaField::dt(const SpaceTimePoint& z) const {
  const double gap = gap_checked(z);
  const double h = std::min(1e-5 * (1.0 + std::abs(z.t)), 0.25 * gap);
  SpaceTimePoint zp = z, zm = z;
  zp.t += h;
  zm.t -= h;
  return (value(zp) - value(zm)) / (2.0 * h);
}

double GammaField::grad_xt_norm(const SpaceTimePoint& z) const {
  const Vec g = grad_x(z);
  const double gt = dt(z);
  return std::sqrt(g.norm2() + gt * gt);
}

std::pair<SpaceTimePoint, SpaceTimePoint> ConstantGammaField::forward_pair(const SpaceTimePoint& z) const {
  const double gap = gap_checked(z);
  SpaceTimePoint upper;
  upper.x = pole().x;
  for (int i = 0; i < dim(); ++i) upper.x[i] += drift_[i] * gap;
  upper.t = gap;
  SpaceTimePoint lower;
  lower.x = z.x;
  lower.t = 0.0;
  return {upper, lower};
}

double ConstantGammaField::value(const SpaceTimePoint& z) const {
  const auto [up, lo] = forward_pair(z);
  return std::exp(rate_ * up.t) * spec_.value(up, lo);
}

double ConstantGammaField::log_value(const SpaceTimePoint& z) const {
  const auto [up, lo] = forward_pair(z);
  return rate_ * up.t + spec_.log_value(up, lo);
}

Vec ConstantGammaField::grad_x(const SpaceTimePoint& z) const {
  // Derivative in the field point; the kernel depends on w = x0 - x + b gap.
  const auto [up, lo] = forward_pair(z);
  Vec g = spec_.grad_x(up, lo);
  g *= -std::exp(rate_ * up.t);
  return g;
}

double ConstantGammaField::dt(const SpaceTimePoint& z) const {
  // d/dt with gap = t0 - t: flips the gap derivative; the drift moves the
  // effective center, the rate scales the value.
  const auto [up, lo] = forward_pair(z);
  const double factor = std::exp(rate_ * up.t);
  double out = -rate_ * factor * spec_.value(up, lo);
  out -= factor * spec_.dt(up, lo);
  out -= factor * dot(spec_.grad_x(up, lo), drift_);
  return out;
}

double ConstantGammaField::envelope_lambda_plus() const { return spec_.envelope_lambda_plus(); }

double ConstantGammaField::envelope_c_plus() const {
  // Drift widens the effective support; rate scales the level. A generous
  // fixed horizon keeps the envelope a true upper bound at desk scale.
  const double horizon = 4.0;
  double c = spec_.envelope_c_plus();
  if (rate_ > 0.0) c *= std::exp(rate_ * horizon);
  if (drift_.norm() > 0.0) c *= std::exp(drift_.norm2() * horizon / (2.0 * spec_.envelope_lambda_plus()));
  return c;
}

}  // namespace pmvf
