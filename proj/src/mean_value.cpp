#include "pmvf/mean_value.hpp"

#include <cmath>
#include <stdexcept>

#include "pmvf/special_functions.hpp"

namespace pmvf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

KernelEvaluator::KernelEvaluator(const GammaField& field, const ParabolicOperator& op, double grad_epsilon)
    : field_(&field), op_(&op), grad_epsilon_(grad_epsilon) {
  if (grad_epsilon_ < 0.0) grad_epsilon_ = 1e-14;
}

double KernelEvaluator::kernel_K(const SpaceTimePoint& z) const {
  const Vec g = field_->grad_x(z);
  const double gt = field_->dt(z);
  const double norm = std::sqrt(g.norm2() + gt * gt);
  if (norm < grad_epsilon_ || !std::isfinite(norm)) return 0.0;  // K(z0; z) = 0 at critical points
  return quad_form(op_->a(z), g) / norm;
}

double KernelEvaluator::kernel_M(const SpaceTimePoint& z) const {
  const double gamma = field_->value(z);
  if (!(gamma > 0.0)) throw std::runtime_error("kernel_M: non-positive Gamma (series pathology)");
  const Vec g = field_->grad_x(z);
  return quad_form(op_->a(z), g) / (gamma * gamma);
}

KernelEvaluator::Extended KernelEvaluator::kernel_extended(const SpaceTimePoint& z, double r, int m) const {
  if (m < 1) throw std::invalid_argument("kernel_extended: m must be >= 1");
  const double gap = field_->pole().t - z.t;
  if (!(gap > 0.0)) throw std::domain_error("kernel_extended: requires t < t0");
  const int n = field_->dim();
  const double gamma = field_->value(z);
  if (!(gamma > 0.0)) throw std::runtime_error("kernel_extended: non-positive Gamma");
  const double arg = (n + m) * std::log(r) + std::log(gamma) - 0.5 * m * std::log(4.0 * kPi * gap);
  if (arg < -1e-12) throw std::domain_error("kernel_extended: point outside Omega_r^{(m)}");
  Extended out;
  out.n_r = 2.0 * std::sqrt(gap) * std::sqrt(std::max(0.0, arg));
  const double omega_m = unit_ball_volume(m);
  const double nm = std::pow(out.n_r, m);
  out.m_rm = omega_m * nm * (kernel_M(z) + (static_cast<double>(m) / (m + 2)) * out.n_r * out.n_r / (4.0 * gap * gap));
  out.w_rm = omega_m * nm / std::pow(r, n + m) -
             0.5 * m * omega_m / std::pow(4.0 * kPi, 0.5 * m) * gamma *
                 gamma_lower_incomplete(0.5 * m, out.n_r * out.n_r / (4.0 * gap));
  return out;
}

namespace {

MeanValueReport finish(MeanValueReport rep) {
  rep.residual = rep.u0 - (rep.kernel_term + rep.f_term + rep.drift_term);
  return rep;
}

double drift_coefficient(const ParabolicOperator& op, const SpaceTimePoint& z) {
  double v = 0.0;
  if (op.div_b) v += op.div_b(z);
  if (op.c) v -= op.c(z);
  return v;
}

bool has_drift_term(const ParabolicOperator& op) {
  return static_cast<bool>(op.div_b) || static_cast<bool>(op.c);
}

}  // namespace

MeanValueReport surface_mean_value(const SolutionField& u, const SolutionField* f, const ParabolicOperator& op,
                                   const KernelEvaluator& ev, double r, const MeanValueConfig& cfg) {
  const GammaField& field = ev.field();
  const int n = field.dim();
  MeanValueReport rep;
  rep.formula = "surface";
  rep.r = r;
  rep.u0 = u.value(field.pole());

  const LevelSurfaceMesh mesh = extract_sphere(field, r, cfg.sphere_resolution, ev.grad_epsilon());
  rep.mesh_points = mesh.points.size();
  rep.kernel_term = surface_integral(mesh, [&](const SpaceTimePoint& z) { return ev.kernel_K(z) * u.value(z); });

  const double level = std::pow(r, -n);
  const BallRegion region = make_ball_region(field, r, 0);
  if (f) {
    const VolumeResult vr = volume_integral(
        region, [&](const SpaceTimePoint& z) { return f->value(z) * (level - field.value(z)); }, cfg.quad);
    rep.f_term = vr.value;
    rep.quad_increment = std::max(rep.quad_increment, vr.increment);
  }
  if (has_drift_term(op)) {
    const VolumeResult vr = volume_integral(
        region, [&](const SpaceTimePoint& z) { return drift_coefficient(op, z) * u.value(z); }, cfg.quad);
    rep.drift_term = vr.value * level;
    rep.quad_increment = std::max(rep.quad_increment, vr.increment);
  }
  return finish(rep);
}

MeanValueReport volume_mean_value(const SolutionField& u, const SolutionField* f, const ParabolicOperator& op,
                                  const KernelEvaluator& ev, double r, const MeanValueConfig& cfg) {
  const GammaField& field = ev.field();
  const int n = field.dim();
  MeanValueReport rep;
  rep.formula = "volume";
  rep.r = r;
  rep.u0 = u.value(field.pole());

  const double inv_rn = std::pow(r, -n);
  const BallRegion region = make_ball_region(field, r, 0);
  const VolumeResult vr =
      volume_integral(region, [&](const SpaceTimePoint& z) { return ev.kernel_M(z) * u.value(z); }, cfg.quad);
  rep.kernel_term = inv_rn * vr.value;
  rep.quad_increment = vr.increment * inv_rn;

  if (f) {
    const RadialResult rr = radial_profile_integral(
        field, 0,
        [&](double rho, const SpaceTimePoint& z) { return f->value(z) * (std::pow(rho, -n) - field.value(z)); },
        [&](double rho) { return std::pow(rho, n - 1); }, r, cfg.rho_nodes, cfg.quad);
    rep.f_term = n * inv_rn * rr.value;
  }
  if (has_drift_term(op)) {
    const RadialResult rr = radial_profile_integral(
        field, 0, [&](double, const SpaceTimePoint& z) { return drift_coefficient(op, z) * u.value(z); },
        [&](double rho) { return 1.0 / rho; }, r, cfg.rho_nodes, cfg.quad);
    rep.drift_term = n * inv_rn * rr.value;
  }
  return finish(rep);
}

MeanValueReport extended_mean_value(const SolutionField& u, const SolutionField* f, const ParabolicOperator& op,
                                    const KernelEvaluator& ev, double r, int m, const MeanValueConfig& cfg) {
  if (m < 1) throw std::invalid_argument("extended_mean_value: m must be >= 1");
  const GammaField& field = ev.field();
  const int n = field.dim();
  MeanValueReport rep;
  rep.formula = "extended";
  rep.r = r;
  rep.m = m;
  rep.u0 = u.value(field.pole());

  const double inv_rnm = std::pow(r, -(n + m));
  const double omega_m = unit_ball_volume(m);
  const BallRegion region = make_ball_region(field, r, m);
  const VolumeResult vr = volume_integral(
      region, [&](const SpaceTimePoint& z) { return ev.kernel_extended(z, r, m).m_rm * u.value(z); }, cfg.quad);
  rep.kernel_term = inv_rnm * vr.value;
  rep.quad_increment = vr.increment * inv_rnm;

  if (f) {
    const RadialResult rr = radial_profile_integral(
        field, m, [&](double rho, const SpaceTimePoint& z) { return ev.kernel_extended(z, rho, m).w_rm * f->value(z); },
        [&](double rho) { return std::pow(rho, n + m - 1); }, r, cfg.rho_nodes, cfg.quad);
    rep.f_term = (n + m) * inv_rnm * rr.value;
  }
  if (has_drift_term(op)) {
    const RadialResult rr = radial_profile_integral(
        field, m,
        [&](double rho, const SpaceTimePoint& z) {
          const double nr = ev.kernel_extended(z, rho, m).n_r;
          return std::pow(nr, m) * drift_coefficient(op, z) * u.value(z);
        },
        [&](double rho) { return omega_m / rho; }, r, cfg.rho_nodes, cfg.quad);
    rep.drift_term = (n + m) * inv_rnm * rr.value;
  }
  return finish(rep);
}

double extended_kernel_sup(const KernelEvaluator& ev, double r, int m, int grid_resolution) {
  const ParabolicBall ball = extract_ball(ev.field(), r, grid_resolution, m);
  const int ny = ball.dim() == 1 ? 0 : ball.nx();
  double sup = 0.0;
  for (int it = 1; it <= ball.nt(); ++it)
    for (int ix = 0; ix <= ball.nx(); ++ix)
      for (int iy = 0; iy <= ny; ++iy) {
        if (!ball.interior(it, ix, iy)) continue;
        sup = std::max(sup, ev.kernel_extended(ball.node(it, ix, iy), r, m).m_rm);
      }
  return sup;
}

}  // namespace pmvf
