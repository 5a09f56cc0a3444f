#include "pmvf/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmvf/special_functions.hpp"

namespace pmvf {

namespace {
constexpr double kPi = 3.14159265358979323846;

double cut_gap(double r, int n, int m, double lambda) {
  return r * r / (4.0 * kPi * std::pow(lambda, static_cast<double>(n) / (n + m)));
}
}  // namespace

bool Cylinder::contains(const SpaceTimePoint& z) const {
  const double r2 = r * r;
  const double dist = (z.x - center.x).norm();
  switch (kind) {
    case CylinderKind::Full:
      return dist < r && z.t > center.t - r2 && z.t < center.t;
    case CylinderKind::Lower:
      return dist < theta * r && z.t > center.t - mu * r2 && z.t < center.t - kappa * r2;
    case CylinderKind::Upper:
      return dist < theta * r && z.t > center.t - iota * r2 && z.t < center.t;
    case CylinderKind::Slice:
      return dist <= theta1 * r && z.t == center.t - kappa1 * r2;
  }
  return false;
}

KrmRegion compact_set_krm(const GammaField& field, double r, int m, double lambda, int grid_resolution) {
  const int n = field.dim();
  KrmRegion out;
  out.cut_gap = cut_gap(r, n, m, lambda);
  const ParabolicBall ball(make_ball_region(field, r, m), grid_resolution, grid_resolution);
  const double t0 = field.pole().t;
  const double dt = ball.region().depth / ball.nt();
  const double theta = ball.region().theta;
  const int ny = n == 1 ? 0 : ball.nx();
  for (int it = 1; it <= ball.nt(); ++it) {
    const SpaceTimePoint row = ball.node(it, 0);
    if (row.t > t0 - out.cut_gap + 0.5 * dt) continue;  // above the cut
    for (int ix = 0; ix <= ball.nx(); ++ix) {
      for (int iy = 0; iy <= ny; ++iy) {
        const double h = ball.h_value(it, ix, iy);
        if (!std::isfinite(h)) continue;
        // Closure at grid resolution: keep the node when a face neighbour
        // straddles the level, i.e. h >= theta - local variation.
        double slack = 0.0;
        if (ix > 0) slack = std::max(slack, std::abs(h - ball.h_value(it, ix - 1, iy)));
        if (ix < ball.nx()) slack = std::max(slack, std::abs(h - ball.h_value(it, ix + 1, iy)));
        if (it > 1 && std::isfinite(ball.h_value(it - 1, ix, iy)))
          slack = std::max(slack, std::abs(h - ball.h_value(it - 1, ix, iy)));
        if (it < ball.nt()) slack = std::max(slack, std::abs(h - ball.h_value(it + 1, ix, iy)));
        if (h >= theta - slack) out.points.push_back(ball.node(it, ix, iy));
      }
    }
  }
  out.empty = out.points.empty();
  return out;
}

double closed_form_m_minus(int n, int m, double lambda, double r) {
  const double omega_m = unit_ball_volume(m);
  return std::pow(lambda, -static_cast<double>(n) * (m - 2) / (n + m)) * (m * omega_m / (m + 2)) *
         (std::pow(r, 2 * m - 4) / std::pow(2.0 * kPi, m - 2)) *
         std::pow((n + m) * std::log(5.0 / 4.0), 0.5 * (m + 2));
}

double assemble_c_k(int n, int m, double m_plus, double theta, double m_minus) {
  return std::pow(5.0, n + m) * m_plus / (std::pow(theta, n + m) * m_minus);
}

namespace {

// Checks Omega_{theta r}^{(m)}(z) subset Omega_{4r}^{(m)}(z0) cap {tau <= t0 - cut}
// by classifying the small ball's grid against the big field.
bool small_ball_inside(const ParabolicOperator& op, const FieldFactory& factory, const GammaField& big_field,
                       const SpaceTimePoint& z, double theta_r, double big_r, int m, double cut_time_max,
                       int grid_resolution) {
  (void)op;
  const auto small_field = factory(z);
  BallRegion small_reg;
  try {
    small_reg = make_ball_region(*small_field, theta_r, m);
  } catch (const std::exception&) {
    return false;
  }
  const int n = big_field.dim();
  const double big_theta = -(n + m) * std::log(big_r);
  BallRegion big_reg;
  big_reg.field = &big_field;
  big_reg.r = big_r;
  big_reg.m = m;
  big_reg.theta = big_theta;
  const ParabolicBall small_ball(small_reg, grid_resolution, grid_resolution);
  const int ny = n == 1 ? 0 : small_ball.nx();
  for (int it = 1; it <= small_ball.nt(); ++it)
    for (int ix = 0; ix <= small_ball.nx(); ++ix)
      for (int iy = 0; iy <= ny; ++iy) {
        if (!small_ball.interior(it, ix, iy)) continue;
        const SpaceTimePoint zz = small_ball.node(it, ix, iy);
        if (zz.t > cut_time_max) return false;
        if (!(big_reg.level_value(zz) > big_theta)) return false;
      }
  return true;
}

}  // namespace

HarnackConstants compute_constants(const ParabolicOperator& op, const FieldFactory& factory,
                                   const SpaceTimePoint& z0, int m, const std::vector<double>& r_list,
                                   int grid_resolution) {
  if (m <= 2) throw std::invalid_argument("compute_constants: m must exceed 2");
  if (r_list.empty()) throw std::invalid_argument("compute_constants: empty radius list");
  const int n = z0.dim();
  HarnackConstants hc;
  hc.m = m;
  hc.r = *std::min_element(r_list.begin(), r_list.end());

  const auto big_field = factory(z0);

  // Claim iii: scan theta downward, sampling centers from K_r^{(m)}(z0).
  double theta_found = 0.0;
  for (int cand = 9; cand >= 1 && theta_found == 0.0; --cand) {
    const double theta = cand / 10.0;
    bool ok = true;
    for (double r : r_list) {
      const KrmRegion krm = compact_set_krm(*big_field, r, m, op.lambda, grid_resolution);
      if (krm.empty) {
        ok = false;
        break;
      }
      // Sample a handful of K-points, always including the extremes.
      std::vector<SpaceTimePoint> centers;
      const std::size_t stride = std::max<std::size_t>(1, krm.points.size() / 6);
      for (std::size_t i = 0; i < krm.points.size(); i += stride) centers.push_back(krm.points[i]);
      centers.push_back(krm.points.back());
      const double cut_time_max = z0.t - krm.cut_gap + 1e-12 * std::max(1.0, std::abs(z0.t));
      for (const auto& z : centers) {
        if (!small_ball_inside(op, factory, *big_field, z, theta * r, 4.0 * r, m, cut_time_max,
                               std::max(40, grid_resolution / 4))) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (ok) theta_found = theta;
  }
  if (theta_found == 0.0) throw std::runtime_error("compute_constants: no theta candidate passes the inclusion scan");
  hc.theta = theta_found;

  // Claim ii: M+ as the grid sup of M_{theta r}^{(m)} over Omega_{theta r}^{(m)}.
  // Translation invariance is not assumed: sample a few centers.
  double m_plus = 0.0;
  for (double r : r_list) {
    const KrmRegion krm = compact_set_krm(*big_field, r, m, op.lambda, grid_resolution);
    std::vector<SpaceTimePoint> centers{z0};
    if (!krm.empty) {
      centers.push_back(krm.points.front());
      centers.push_back(krm.points.back());
    }
    for (const auto& z : centers) {
      const auto f = factory(z);
      KernelEvaluator ev(*f, op);
      m_plus = std::max(m_plus, extended_kernel_sup(ev, hc.theta * r, m, grid_resolution));
    }
  }
  hc.m_plus = m_plus;
  hc.m_minus = closed_form_m_minus(n, m, op.lambda, hc.r);
  hc.c_k = assemble_c_k(n, m, hc.m_plus, hc.theta, hc.m_minus);
  return hc;
}

void fit_slice_constants(const ParabolicOperator& op, const FieldFactory& factory, const SpaceTimePoint& z0,
                         double r, int grid_resolution, HarnackConstants& constants) {
  const int n = z0.dim();
  const int m = constants.m;
  constants.kappa1 = 1.5 * cut_gap(1.0, n, m, op.lambda);  // in units of r^2
  const auto big_field = factory(z0);
  const double cut_time_max = z0.t - cut_gap(r, n, m, op.lambda) + 1e-12;
  double theta1 = 0.0;
  for (int cand = 9; cand >= 1; --cand) {
    const double t1 = cand / 10.0;
    bool ok = true;
    // Slice centers at depth kappa1 r^2, |x - x0| <= theta1 r.
    for (int i = -3; i <= 3 && ok; ++i) {
      SpaceTimePoint z = z0;
      z.x[0] = z0.x[0] + t1 * r * i / 3.0;
      z.t = z0.t - constants.kappa1 * r * r;
      ok = small_ball_inside(op, factory, *big_field, z, constants.theta * r, 4.0 * r, m, cut_time_max,
                             std::max(40, grid_resolution / 4));
    }
    if (ok) {
      theta1 = t1;
      break;
    }
  }
  if (theta1 == 0.0) throw std::runtime_error("fit_slice_constants: no theta1 candidate passes");
  constants.theta1 = theta1;
  constants.c_d = assemble_c_k(n, m, constants.m_plus, constants.theta, closed_form_m_minus(n, m, op.lambda, r));
}

BallHarnackReport harnack_ball_check(const SolutionField& u, const GammaField& field, double r, int m, double lambda,
                                     const HarnackConstants& constants, int grid_resolution) {
  BallHarnackReport rep;
  rep.u0 = u.value(field.pole());
  if (!(rep.u0 > 0.0)) throw std::invalid_argument("harnack_ball_check: u(z0) must be positive");
  const KrmRegion krm = compact_set_krm(field, r, m, lambda, grid_resolution);
  rep.c_k = constants.c_k;
  for (const auto& z : krm.points) rep.sup_u = std::max(rep.sup_u, u.value(z));
  rep.points = krm.points.size();
  rep.ratio = rep.sup_u / rep.u0;
  rep.within = rep.ratio <= rep.c_k;
  return rep;
}

HarnackChain build_chain(const SpaceTimePoint& z_plus, const SpaceTimePoint& z_minus, double r0, double kappa1,
                         double theta1) {
  if (!(z_plus.t > z_minus.t)) throw std::domain_error("build_chain: requires t+ > t-");
  if (!(r0 > 0.0 && kappa1 > 0.0 && theta1 > 0.0)) throw std::invalid_argument("build_chain: bad constants");
  HarnackChain chain;
  chain.z_plus = z_plus;
  chain.z_minus = z_minus;
  const double dt = z_plus.t - z_minus.t;
  const Vec dx = z_minus.x - z_plus.x;
  const double dist = dx.norm();

  chain.small_slope = dist / dt <= theta1 / (kappa1 * r0);
  double q;
  if (chain.small_slope)
    q = dt / (kappa1 * r0 * r0);
  else
    q = kappa1 * dist * dist / (theta1 * theta1 * dt);
  int m = static_cast<int>(std::ceil(q - 1e-12));
  if (m < 1) m = 1;
  chain.m = m;
  chain.r = std::sqrt(dt / (m * kappa1));
  chain.y = (1.0 / (m * chain.r)) * dx;  // w_m lands on z- exactly

  chain.points.reserve(m + 1);
  for (int j = 0; j <= m; ++j) {
    SpaceTimePoint w;
    w.x = z_plus.x + (j * chain.r) * chain.y;
    w.t = z_plus.t - j * kappa1 * chain.r * chain.r;
    chain.points.push_back(w);
  }
  chain.points.back() = z_minus;  // remove roundoff drift on the last point
  return chain;
}

InvariantHarnackReport invariant_harnack_check(const SolutionField& u, const SpaceTimePoint& z0, double r,
                                               const Cylinder& lower, const Cylinder& upper,
                                               const HarnackConstants& constants,
                                               const std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>>&
                                                   endpoint_pairs_normalized,
                                               int grid_resolution) {
  InvariantHarnackReport rep;
  const int n = z0.dim();
  const double kappa = lower.kappa, mu = lower.mu, iota = upper.iota, theta_c = lower.theta;
  rep.r0 = std::min({constants.r1 > 0.0 ? constants.r1 : 0.5, 1.0 - theta_c, std::sqrt(1.0 - mu)});

  // Grid sup over Q^- and inf over Q^+ (physical coordinates).
  double sup_l = -1e300, inf_u = 1e300;
  const int g = grid_resolution;
  for (int it = 0; it <= g; ++it) {
    for (int ix = 0; ix <= g; ++ix) {
      for (int iy = 0; iy <= (n == 1 ? 0 : g); ++iy) {
        Vec x(n);
        x[0] = z0.x[0] + theta_c * r * (2.0 * ix / g - 1.0);
        if (n >= 2) x[1] = z0.x[1] + theta_c * r * (2.0 * iy / g - 1.0);
        if ((x - z0.x).norm() > theta_c * r) continue;
        const double tl = z0.t - mu * r * r + (mu - kappa) * r * r * it / g;
        sup_l = std::max(sup_l, u.value(SpaceTimePoint{x, tl}));
        const double tu = z0.t - iota * r * r + iota * r * r * it / g * (1.0 - 1e-9);
        inf_u = std::min(inf_u, u.value(SpaceTimePoint{x, tu}));
      }
    }
  }
  rep.sup_lower = sup_l;
  rep.inf_upper = inf_u;
  rep.log_ratio = std::log(sup_l) - std::log(inf_u);
  const double exponent = std::max(1.0 / (constants.kappa1 * rep.r0 * rep.r0),
                                   4.0 * constants.kappa1 / (constants.theta1 * constants.theta1 * (kappa - iota)));
  rep.log_c_h = exponent * std::log(constants.c_d);
  rep.within = rep.log_ratio <= rep.log_c_h;

  // Chains in normalized coordinates (z0 = 0, r = 1).
  for (const auto& [zp_n, zm_n] : endpoint_pairs_normalized) {
    InvariantHarnackReport::ChainRow row;
    const HarnackChain chain = build_chain(zp_n, zm_n, rep.r0, constants.kappa1, constants.theta1);
    row.m = chain.m;
    row.r = chain.r;
    row.small_slope = chain.small_slope;
    // Membership w_j in D_r(w_{j-1}) and cylinder containment in Q_1(0).
    row.membership_ok = true;
    row.cylinders_ok = true;
    for (std::size_t j = 0; j < chain.points.size(); ++j) {
      const auto& w = chain.points[j];
      if (j >= 1) {
        const auto& prev = chain.points[j - 1];
        const double dxn = (w.x - prev.x).norm();
        const double dtn = prev.t - w.t;
        if (dxn > constants.theta1 * chain.r * (1.0 + 1e-9) ||
            std::abs(dtn - constants.kappa1 * chain.r * chain.r) > 1e-9)
          row.membership_ok = false;
      }
      if (w.x.norm() > 1.0 - chain.r + 1e-12 || w.t - chain.r * chain.r < -1.0 - 1e-12 || w.t > 1e-12)
        row.cylinders_ok = false;
    }
    // Chain-wise bound u(z-) <= C_D^m u(z+), evaluated in physical coords.
    const auto to_phys = [&](const SpaceTimePoint& zn) { return parabolic_rescale(zn, z0, r); };
    const double up = u.value(to_phys(zp_n));
    const double um = u.value(to_phys(zm_n));
    row.log_u_plus = std::log(up);
    row.log_u_minus = std::log(um);
    row.chain_bound_ok = row.log_u_minus <= row.m * std::log(constants.c_d) + row.log_u_plus + 1e-9;
    if (!(row.membership_ok && row.chain_bound_ok && row.cylinders_ok)) rep.all_chains_ok = false;
    rep.chains.push_back(row);
  }
  return rep;
}

}  // namespace pmvf
