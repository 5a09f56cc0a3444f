#include "pmvf/quadrature_engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pmvf {

namespace {

// Spatial half-width of the envelope slice at time gap s (radicand of the
// Gamma^+ level solve); zero outside the envelope.
double envelope_halfwidth(const BallRegion& reg, double s) {
  const int n = reg.dim();
  const double lp = reg.field->envelope_lambda_plus();
  const double cp = reg.field->envelope_c_plus();
  const double pi4 = 4.0 * 3.14159265358979323846;
  const double rad = 4.0 * lp * s *
                     (std::log(cp) + (n + reg.m) * std::log(reg.r) - 0.5 * n * std::log(pi4 * lp * s) -
                      0.5 * reg.m * std::log(pi4 * s));
  return rad > 0.0 ? std::sqrt(rad) * 1.02 : 0.0;
}

// Interior-side bisection of h = theta along the x segment [inside, outside]
// at fixed time.
double bisect_x(const BallRegion& reg, double t, double x_in, double x_out) {
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (x_in + x_out);
    SpaceTimePoint z{Vec{mid}, t};
    if (reg.level_value(z) > reg.theta)
      x_in = mid;
    else
      x_out = mid;
  }
  return x_in;
}

// N = 1 slice integral: locate interior runs on a scan grid, bisect the run
// ends onto the level set, composite Simpson inside each run.
double slice_integral_1d(const BallRegion& reg, const Integrand& f, double t, const QuadratureConfig& cfg) {
  const double s = reg.pole().t - t;
  const double half = envelope_halfwidth(reg, s);
  if (half <= 0.0) return 0.0;
  const double x0 = reg.pole().x[0];
  const int n = cfg.slice_scan;
  const double h = 2.0 * half / n;
  std::vector<bool> in(n + 1);
  bool any = false;
  for (int i = 0; i <= n; ++i) {
    SpaceTimePoint z{Vec{x0 - half + i * h}, t};
    in[i] = reg.level_value(z) > reg.theta;
    any = any || in[i];
  }
  if (!any) return 0.0;
  double acc = 0.0;
  int i = 0;
  while (i <= n) {
    if (!in[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 <= n && in[j + 1]) ++j;
    const double xi = x0 - half + i * h;
    const double xj = x0 - half + j * h;
    const double a = (i == 0) ? xi : bisect_x(reg, t, xi, xi - h);
    const double b = (j == n) ? xj : bisect_x(reg, t, xj, xj + h);
    // Composite Simpson with an odd point count.
    int np = cfg.slice_simpson | 1;
    const double hh = (b - a) / (np - 1);
    if (hh > 0.0) {
      double sum = 0.0;
      for (int p = 0; p < np; ++p) {
        const double w = (p == 0 || p == np - 1) ? 1.0 : (p % 2 == 1 ? 4.0 : 2.0);
        const double xp = (p == np - 1) ? b : a + p * hh;  // keep nodes inside the bracket
        sum += w * f(SpaceTimePoint{Vec{xp}, t});
      }
      acc += sum * hh / 3.0;
    }
    i = j + 1;
  }
  return acc;
}

// N = 2 slice integral: marching-squares fractional cells on a per-slab
// raster sized to the envelope slice.
double slice_integral_2d(const BallRegion& reg, const Integrand& f, double t, const QuadratureConfig& cfg) {
  const double s = reg.pole().t - t;
  const double half = envelope_halfwidth(reg, s);
  if (half <= 0.0) return 0.0;
  const int n = cfg.slice_raster;
  const double x0 = reg.pole().x[0], y0 = reg.pole().x[1];
  const double h = 2.0 * half / n;
  std::vector<double> v((n + 1) * (n + 1));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      SpaceTimePoint z{Vec{x0 - half + i * h, y0 - half + j * h}, t};
      const double lv = reg.level_value(z);
      v[i * (n + 1) + j] = std::isfinite(lv) ? lv - reg.theta : -1e30;
    }
  double acc = 0.0;
  const double cell = h * h;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double c00 = v[i * (n + 1) + j], c10 = v[(i + 1) * (n + 1) + j];
      const double c11 = v[(i + 1) * (n + 1) + j + 1], c01 = v[i * (n + 1) + j + 1];
      const int inside = (c00 > 0) + (c10 > 0) + (c11 > 0) + (c01 > 0);
      if (inside == 0) continue;
      const double xa = x0 - half + i * h, ya = y0 - half + j * h;
      if (inside == 4) {
        acc += cell * f(SpaceTimePoint{Vec{xa + 0.5 * h, ya + 0.5 * h}, t});
        continue;
      }
      // Walk the cell boundary; interior corners and edge crossings form the
      // clipped polygon (exact for a linear level function).
      const double cx[4] = {xa, xa + h, xa + h, xa};
      const double cy[4] = {ya, ya, ya + h, ya + h};
      const double cv[4] = {c00, c10, c11, c01};
      double px[8], py[8];
      int np = 0;
      for (int e = 0; e < 4; ++e) {
        const int e2 = (e + 1) % 4;
        if (cv[e] > 0) {
          px[np] = cx[e];
          py[np] = cy[e];
          ++np;
        }
        if ((cv[e] > 0) != (cv[e2] > 0)) {
          const double frac = cv[e] / (cv[e] - cv[e2]);
          px[np] = cx[e] + frac * (cx[e2] - cx[e]);
          py[np] = cy[e] + frac * (cy[e2] - cy[e]);
          ++np;
        }
      }
      if (np < 3) continue;
      double area2 = 0.0, gx = 0.0, gy = 0.0;
      for (int p = 0; p < np; ++p) {
        const int q = (p + 1) % np;
        const double cross = px[p] * py[q] - px[q] * py[p];
        area2 += cross;
        gx += (px[p] + px[q]) * cross;
        gy += (py[p] + py[q]) * cross;
      }
      const double area = 0.5 * std::abs(area2);
      if (area <= 0.0) continue;
      double ex = gx / (3.0 * area2), ey = gy / (3.0 * area2);
      SpaceTimePoint centroid{Vec{ex, ey}, t};
      if (!(reg.level_value(centroid) > reg.theta)) {
        // Pull the evaluation point onto an interior corner when the centroid
        // fell marginally outside.
        for (int e = 0; e < 4; ++e)
          if (cv[e] > 0) {
            centroid = SpaceTimePoint{Vec{cx[e], cy[e]}, t};
            break;
          }
      }
      acc += area * f(centroid);
    }
  }
  return acc;
}

// N = 3 slice integral: plain vertex-occupancy raster.
double slice_integral_3d(const BallRegion& reg, const Integrand& f, double t, const QuadratureConfig& cfg) {
  const double s = reg.pole().t - t;
  const double half = envelope_halfwidth(reg, s);
  if (half <= 0.0) return 0.0;
  const int n = cfg.slice_raster_3d;
  const double h = 2.0 * half / n;
  const Vec c = reg.pole().x;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        int inside = 0;
        for (int d = 0; d < 8; ++d) {
          SpaceTimePoint z{Vec{c[0] - half + (i + (d & 1)) * h, c[1] - half + (j + ((d >> 1) & 1)) * h,
                               c[2] - half + (k + ((d >> 2) & 1)) * h},
                           t};
          if (reg.level_value(z) > reg.theta) ++inside;
        }
        if (inside == 0) continue;
        SpaceTimePoint mid{Vec{c[0] - half + (i + 0.5) * h, c[1] - half + (j + 0.5) * h, c[2] - half + (k + 0.5) * h},
                           t};
        if (inside < 8 && !(reg.level_value(mid) > reg.theta)) continue;
        acc += (inside / 8.0) * h * h * h * f(mid);
      }
  return acc;
}

double slice_integral(const BallRegion& reg, const Integrand& f, double t, const QuadratureConfig& cfg) {
  switch (reg.dim()) {
    case 1:
      return slice_integral_1d(reg, f, t, cfg);
    case 2:
      return slice_integral_2d(reg, f, t, cfg);
    default:
      return slice_integral_3d(reg, f, t, cfg);
  }
}

}  // namespace

VolumeResult volume_integral(const BallRegion& region, const Integrand& integrand, const QuadratureConfig& cfg) {
  const double depth = region.depth;
  const double t0 = region.pole().t;
  const double eps0 = depth * cfg.eps0_fraction;
  VolumeResult res;

  // Main slabs on [eps0, depth], graded toward the bottom (slice widths
  // vanish like sqrt there): s = depth - (depth - eps0) eta^2.
  double main_part = 0.0;
  for (int j = 0; j < cfg.time_slabs; ++j) {
    const double eta = (j + 0.5) / cfg.time_slabs;
    const double s = depth - (depth - eps0) * eta * eta;
    const double w = 2.0 * (depth - eps0) * eta / cfg.time_slabs;
    main_part += w * slice_integral(region, integrand, t0 - s, cfg);
  }
  res.eps.push_back(eps0);
  res.i_eps.push_back(main_part);

  // Dyadic refinement toward the pole: slabs [eps_{k+1}, eps_k], sub-slabs
  // graded in sqrt(s) to absorb the kernels' s^{-1/2}-type growth.
  double acc = main_part;
  for (int k = 0; k < cfg.eps_k_max; ++k) {
    const double hi = eps0 * std::pow(0.5, k);
    const double lo = 0.5 * hi;
    const double va = std::sqrt(lo), vb = std::sqrt(hi);
    double slab = 0.0;
    for (int j = 0; j < cfg.eps_sub_slabs; ++j) {
      const double v = va + (j + 0.5) * (vb - va) / cfg.eps_sub_slabs;
      const double s = v * v;
      const double w = 2.0 * v * (vb - va) / cfg.eps_sub_slabs;
      slab += w * slice_integral(region, integrand, t0 - s, cfg);
    }
    acc += slab;
    res.eps.push_back(lo);
    res.i_eps.push_back(acc);
  }

  // Divergence detection: increments must not grow persistently.
  int growing = 0;
  for (size_t i = 2; i < res.i_eps.size(); ++i) {
    const double d1 = std::abs(res.i_eps[i] - res.i_eps[i - 1]);
    const double d0 = std::abs(res.i_eps[i - 1] - res.i_eps[i - 2]);
    growing = d1 > d0 * 1.05 ? growing + 1 : 0;
  }
  res.diverged = growing >= 3;

  const size_t nn = res.i_eps.size();
  res.increment = nn >= 2 ? std::abs(res.i_eps[nn - 1] - res.i_eps[nn - 2]) : 0.0;
  res.value = res.i_eps.back();
  if (cfg.extrapolate && nn >= 3 && !res.diverged) {
    const double d1 = res.i_eps[nn - 1] - res.i_eps[nn - 2];
    const double d0 = res.i_eps[nn - 2] - res.i_eps[nn - 3];
    const double denom = d1 - d0;
    if (std::abs(denom) > 1e-300 && std::abs(d1 / denom) < 50.0) {
      res.value = res.i_eps[nn - 1] - d1 * d1 / denom;
      res.extrapolated = true;
    }
  }
  return res;
}

VolumeResult volume_integral(const ParabolicBall& ball, const Integrand& integrand, const QuadratureConfig& cfg) {
  return volume_integral(ball.region(), integrand, cfg);
}

double surface_integral(const LevelSurfaceMesh& mesh, const Integrand& integrand) {
  if (mesh.points.empty()) throw std::invalid_argument("surface_integral: empty mesh");
  double acc = 0.0, comp = 0.0;
  for (const auto& sp : mesh.points) {
    if (sp.near_critical) continue;  // zero K-weight convention
    const double term = sp.weight * integrand(sp.p);
    const double y = term - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return acc;
}

RadialResult radial_profile_integral(const GammaField& field, int m,
                                     const std::function<double(double, const SpaceTimePoint&)>& inner_integrand,
                                     const std::function<double(double)>& weight, double r, int nodes,
                                     const QuadratureConfig& cfg) {
  if (nodes < 4) throw std::invalid_argument("radial_profile_integral: need at least 4 nodes");
  RadialResult out;
  // rho = r xi^{3/2}: clusters nodes at small rho where the regions
  // degenerate; d rho = 1.5 r xi^{1/2} d xi.
  for (int j = 0; j < nodes; ++j) {
    const double xi = (j + 0.5) / nodes;
    const double rho = r * std::pow(xi, 1.5);
    const double w = 1.5 * r * std::sqrt(xi) / nodes;
    BallRegion reg;
    try {
      reg = make_ball_region(field, rho, m);
    } catch (const std::exception&) {
      ++out.skipped_nodes;
      continue;
    }
    if (!(reg.depth > 1e-306)) {
      ++out.skipped_nodes;
      continue;
    }
    const Integrand f = [&](const SpaceTimePoint& z) { return inner_integrand(rho, z); };
    const VolumeResult inner = volume_integral(reg, f, cfg);
    out.value += w * weight(rho) * inner.value;
  }
  return out;
}

CoareaReport coarea_check(const std::function<double(const SpaceTimePoint&)>& G,
                          const std::function<double(const SpaceTimePoint&)>& grad_norm_G, const Integrand& g,
                          const Box& box, const std::vector<double>& level_list, const QuadratureConfig& cfg) {
  if (box.dim() != 1) throw std::invalid_argument("coarea_check: N = 1 boxes only");
  if (level_list.size() < 2) throw std::invalid_argument("coarea_check: need at least two levels");
  CoareaReport rep;

  // Route 1: midpoint rule for int g |grad G| over the box.
  const int nt = cfg.time_slabs, nx = std::max(cfg.slice_scan, 64);
  const double ht = (box.t_hi - box.t_lo) / nt, hx = (box.x_hi[0] - box.x_lo[0]) / nx;
  double lhs = 0.0;
  for (int it = 0; it < nt; ++it)
    for (int ix = 0; ix < nx; ++ix) {
      SpaceTimePoint z{Vec{box.x_lo[0] + (ix + 0.5) * hx}, box.t_lo + (it + 0.5) * ht};
      lhs += g(z) * grad_norm_G(z);
    }
  rep.lhs = lhs * ht * hx;

  // Route 2: marching level curves, trapezoid over the level list.
  std::vector<double> levels = level_list;
  std::sort(levels.begin(), levels.end());
  std::vector<double> len(levels.size());
  const int mt = std::max(nt, 200), mx2 = std::max(nx, 200);
  for (size_t i = 0; i < levels.size(); ++i) len[i] = level_curve_integral(G, g, box, levels[i], mt, mx2);
  double rhs = 0.0;
  for (size_t i = 0; i + 1 < levels.size(); ++i) rhs += 0.5 * (len[i] + len[i + 1]) * (levels[i + 1] - levels[i]);
  rep.rhs = rhs;
  rep.relative_discrepancy = std::abs(rep.lhs - rep.rhs) / std::max({std::abs(rep.lhs), std::abs(rep.rhs), 1e-300});
  return rep;
}

McResult montecarlo_oracle(const std::function<bool(const SpaceTimePoint&)>& indicator, const Integrand& integrand,
                           const Box& box, long long n, std::uint64_t seed) {
  if (n < 100) throw std::invalid_argument("montecarlo_oracle: need n >= 100");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int dim = box.dim();
  double sum = 0.0, sum2 = 0.0;
  McResult res;
  for (long long i = 0; i < n; ++i) {
    SpaceTimePoint z;
    z.x = Vec(dim);
    for (int d = 0; d < dim; ++d) z.x[d] = box.x_lo[d] + (box.x_hi[d] - box.x_lo[d]) * uni(rng);
    z.t = box.t_lo + (box.t_hi - box.t_lo) * uni(rng);
    double v = 0.0;
    if (indicator(z)) {
      v = integrand(z);
      ++res.hits;
    }
    sum += v;
    sum2 += v * v;
  }
  const double vol = box.volume();
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  res.estimate = vol * mean;
  res.standard_error = vol * std::sqrt(var / n);
  res.zero_hits = res.hits == 0;
  return res;
}

}  // namespace pmvf
