#include "pmvf/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pmvf {

double AdmissibleCurve::speed_l2_squared() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    const double dx = breakpoints[i].x[0] - breakpoints[i - 1].x[0];
    acc += dx * dx / delta;
  }
  return acc;
}

SpaceTimePoint AttainableRegion::node(int row, int ix) const {
  const double dx = (box.x_hi[0] - box.x_lo[0]) / nx;
  return SpaceTimePoint{Vec{box.x_lo[0] + ix * dx}, source.t - row * delta};
}

std::size_t AttainableRegion::count() const {
  std::size_t c = 0;
  for (auto b : mask)
    if (b) ++c;
  return c;
}

bool AttainableRegion::subset_of(const AttainableRegion& other) const {
  if (nx != other.nx) return false;
  const std::size_t rows_common = std::min(mask.size(), other.mask.size());
  for (std::size_t i = 0; i < rows_common; ++i)
    if (mask[i] && !other.mask[i]) return false;
  for (std::size_t i = rows_common; i < mask.size(); ++i)
    if (mask[i]) return false;
  return true;
}

AttainableRegion reachable_set(const DomainGrid& domain, const SpaceTimePoint& z0, double v_max, double delta) {
  if (z0.dim() != 1) throw std::invalid_argument("reachable_set: dimension 1 grids only");
  if (!(v_max > 0.0 && delta > 0.0)) throw std::invalid_argument("reachable_set: v_max and delta must be positive");
  if (!domain.contains(z0)) throw std::invalid_argument("reachable_set: source outside the domain");

  AttainableRegion out;
  out.source = z0;
  out.v_max = v_max;
  out.delta = delta;
  out.box = domain.box;
  out.nx = domain.nx;
  const int rows = static_cast<int>(std::floor((z0.t - domain.box.t_lo) / delta)) + 1;
  out.rows = rows;
  out.mask.assign(static_cast<std::size_t>(rows) * (out.nx + 1), 0);
  out.parent.assign(static_cast<std::size_t>(rows) * (out.nx + 1), -1);

  const double dx = (domain.box.x_hi[0] - domain.box.x_lo[0]) / domain.nx;
  const auto xat = [&](int ix) { return domain.box.x_lo[0] + ix * dx; };

  // Segment stays inside the domain at grid resolution.
  const auto segment_ok = [&](double xa, double ta, double xb, double tb) {
    const int steps = std::max(2, static_cast<int>(std::ceil(std::abs(xb - xa) / dx)) + 2);
    for (int s = 0; s <= steps; ++s) {
      const double lam = static_cast<double>(s) / steps;
      SpaceTimePoint z{Vec{xa + lam * (xb - xa)}, ta + lam * (tb - ta)};
      if (!domain.contains(z)) return false;
    }
    return true;
  };

  // Frontier row 0: the source column (snap to nearest grid node).
  const int ix0 = static_cast<int>(std::lround((z0.x[0] - domain.box.x_lo[0]) / dx));
  out.mask[ix0] = 1;
  // Ceiling keeps the discrete cone monotone under delta refinement:
  // n * ceil(y/n) >= ceil(y), so splitting a step never shrinks the reach.
  const int reach = static_cast<int>(std::ceil(v_max * delta / dx - 1e-12));
  for (int row = 0; row + 1 < rows; ++row) {
    const double t_here = z0.t - row * delta;
    const double t_next = t_here - delta;
    for (int ix = 0; ix <= out.nx; ++ix) {
      if (!out.reachable(row, ix)) continue;
      for (int jx = std::max(0, ix - reach); jx <= std::min(out.nx, ix + reach); ++jx) {
        if (out.reachable(row + 1, jx)) continue;
        if (!segment_ok(xat(ix), t_here, xat(jx), t_next)) continue;
        out.mask[static_cast<std::size_t>(row + 1) * (out.nx + 1) + jx] = 1;
        out.parent[static_cast<std::size_t>(row + 1) * (out.nx + 1) + jx] = ix;
      }
    }
  }
  return out;
}

AdmissibleCurve AttainableRegion::curve_to(int row, int ix) const {
  if (!reachable(row, ix)) throw std::invalid_argument("curve_to: node is not reachable");
  AdmissibleCurve curve;
  curve.delta = delta;
  std::vector<SpaceTimePoint> reversed;
  int r = row, c = ix;
  while (r > 0) {
    reversed.push_back(node(r, c));
    c = parent[static_cast<std::size_t>(r) * (nx + 1) + c];
    --r;
  }
  reversed.push_back(node(0, static_cast<int>(std::lround((source.x[0] - box.x_lo[0]) * nx / (box.x_hi[0] - box.x_lo[0])))));
  curve.breakpoints.assign(reversed.rbegin(), reversed.rend());
  return curve;
}

MaxPrincipleReport check_strong_max_principle(const SolutionField& u, const SolutionField* f,
                                              const ParabolicOperator& op, const AttainableRegion& region,
                                              const DomainGrid& domain, MaxPrincipleMode mode, double tol) {
  MaxPrincipleReport rep;
  const double u0 = u.value(region.source);

  // Precondition gate, sampled over the full domain grid.
  double domain_max = -1e300, f_min = 1e300;
  for (int row = 0; row < region.rows; ++row)
    for (int ix = 0; ix <= region.nx; ++ix) {
      const SpaceTimePoint z = region.node(row, ix);
      if (!domain.contains(z)) continue;
      domain_max = std::max(domain_max, u.value(z));
      if (f) f_min = std::min(f_min, f->value(z));
    }
  if (mode == MaxPrincipleMode::InteriorMax) {
    if (op.has_zero_order()) {
      rep.precondition_failure = "c must vanish for the interior-max mode";
      return rep;
    }
    if (u0 < domain_max - tol) {
      rep.precondition_failure = "u(z0) is not the sampled maximum";
      return rep;
    }
    if (f && f_min < -tol) {
      rep.precondition_failure = "f takes negative sampled values";
      return rep;
    }
  } else {
    if (domain_max > tol) {
      rep.precondition_failure = "u is not <= 0 on the sampled domain";
      return rep;
    }
    if (std::abs(u0) > tol) {
      rep.precondition_failure = "u(z0) does not vanish";
      return rep;
    }
    if (f && f_min < -tol) {
      rep.precondition_failure = "f takes negative sampled values";
      return rep;
    }
  }
  rep.preconditions_hold = true;

  const double target = mode == MaxPrincipleMode::InteriorMax ? u0 : 0.0;
  for (int row = 0; row < region.rows; ++row)
    for (int ix = 0; ix <= region.nx; ++ix) {
      if (!region.reachable(row, ix)) continue;
      const SpaceTimePoint z = region.node(row, ix);
      rep.worst_u_deviation = std::max(rep.worst_u_deviation, std::abs(u.value(z) - target));
      if (f) rep.worst_f_deviation = std::max(rep.worst_f_deviation, std::abs(f->value(z)));
      ++rep.checked;
    }
  rep.conclusion_holds = rep.worst_u_deviation <= tol && rep.worst_f_deviation <= tol;
  return rep;
}

PropagationStepReport mvf_propagation_step(const SolutionField& u, const SolutionField* f,
                                           const ParabolicOperator& op, const KernelEvaluator& ev, double rho,
                                           const MeanValueConfig& cfg) {
  (void)op;
  PropagationStepReport rep;
  const GammaField& field = ev.field();
  const int n = field.dim();
  const double u1 = u.value(field.pole());
  const double inv_rn = std::pow(rho, -n);

  const BallRegion region = make_ball_region(field, rho, 0);
  double max_dev = 0.0;
  std::size_t dev_count = 0, total = 0;
  const VolumeResult vr = volume_integral(
      region,
      [&](const SpaceTimePoint& z) {
        const double val = ev.kernel_M(z) * (u.value(z) - u1);
        const double a = std::abs(val);
        ++total;
        if (a > 1e-12) ++dev_count;
        if (a > max_dev) max_dev = a;
        return val;
      },
      cfg.quad);
  rep.deficit = inv_rn * vr.value;
  rep.max_deviation = max_dev;
  rep.deviating_fraction = total ? static_cast<double>(dev_count) / total : 0.0;
  rep.deficit_nonpositive = rep.deficit <= 0.0;

  if (f) {
    const VolumeResult fr = volume_integral(
        region, [&](const SpaceTimePoint& z) { return f->value(z) * (inv_rn - field.value(z)); }, cfg.quad);
    rep.f_term = fr.value;
  }
  return rep;
}

}  // namespace pmvf
