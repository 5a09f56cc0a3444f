#include "pmvf/level_set_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace pmvf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double BallRegion::level_value(const SpaceTimePoint& z) const {
  const double gap = pole().t - z.t;
  if (!(gap > 0.0)) return kNegInf;
  double h = field->log_value(z);
  if (m > 0) h -= 0.5 * m * std::log(4.0 * kPi * gap);
  return h;
}

BallRegion make_ball_region(const GammaField& field, double r, int m) {
  if (!(r > 0.0)) throw std::invalid_argument("make_ball_region: r must be positive");
  if (m < 0) throw std::invalid_argument("make_ball_region: m must be >= 0");
  const int n = field.dim();
  const double lp = field.envelope_lambda_plus();
  const double cp = field.envelope_c_plus();
  BallRegion reg;
  reg.field = &field;
  reg.r = r;
  reg.m = m;
  reg.theta = -(n + m) * std::log(r);

  // Envelope level set: C+ (4 pi lp s)^{-n/2} e^{-d^2/(4 lp s)} (4 pi s)^{-m/2}
  // >= r^{-(n+m)}. Depth: solve at d = 0.
  //   (n/2) log(4 pi lp s) + (m/2) log(4 pi s) = log C+ + (n+m) log r.
  const double rhs = std::log(cp) + (n + m) * std::log(r);
  // Solve F(s) = (n/2) log(4 pi lp s) + (m/2) log(4 pi s) - rhs = 0 (monotone).
  double lo = 1e-300, hi = 1.0;
  const auto f = [&](double s) {
    return 0.5 * n * std::log(4.0 * kPi * lp * s) + 0.5 * m * std::log(4.0 * kPi * s) - rhs;
  };
  while (f(hi) < 0.0 && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  reg.depth = 0.5 * (lo + hi);
  if (!(reg.depth > 0.0) || !std::isfinite(reg.depth))
    throw std::runtime_error("make_ball_region: degenerate envelope depth");

  // Spatial half-width: max over s of d(s) with
  //   d^2 = 4 lp s (log C+ + (n+m) log r - (n/2) log(4 pi lp s) - (m/2) log(4 pi s)).
  double half = 0.0;
  for (int i = 1; i <= 400; ++i) {
    const double s = reg.depth * i / 400.0;
    const double radicand = 4.0 * lp * s * (-f(s));
    if (radicand > 0.0) half = std::max(half, std::sqrt(radicand));
  }
  half *= 1.02;  // grid-safety margin
  if (!(half > 0.0)) throw std::runtime_error("make_ball_region: degenerate envelope width");
  const SpaceTimePoint& z0 = field.pole();
  reg.x_lo = Vec(n);
  reg.x_hi = Vec(n);
  for (int i = 0; i < n; ++i) {
    reg.x_lo[i] = z0.x[i] - half;
    reg.x_hi[i] = z0.x[i] + half;
  }
  return reg;
}

// ---------------------------------------------------------------------------
// ParabolicBall
// ---------------------------------------------------------------------------

ParabolicBall::ParabolicBall(BallRegion region, int nt, int nx) : region_(std::move(region)), nt_(nt), nx_(nx) {
  if (nt < 2 || nx < 2) throw std::invalid_argument("ParabolicBall: grid too coarse");
  const int n = region_.dim();
  if (n > 2) throw std::invalid_argument("ParabolicBall: classification grids support N <= 2");
  dt_ = region_.depth / nt_;
  dx_ = Vec(n);
  for (int i = 0; i < n; ++i) dx_[i] = (region_.x_hi[i] - region_.x_lo[i]) / nx_;
  const std::size_t rows = static_cast<std::size_t>(nt_ + 1);
  const std::size_t per_row = n == 1 ? (nx_ + 1) : static_cast<std::size_t>(nx_ + 1) * (nx_ + 1);
  h_.resize(rows * per_row);
  for (int it = 0; it <= nt_; ++it) {
    for (int ix = 0; ix <= nx_; ++ix) {
      if (n == 1) {
        h_[index(it, ix, 0)] = it == 0 ? kNegInf : region_.level_value(node(it, ix));
      } else {
        for (int iy = 0; iy <= nx_; ++iy)
          h_[index(it, ix, iy)] = it == 0 ? kNegInf : region_.level_value(node(it, ix, iy));
      }
    }
  }
}

std::size_t ParabolicBall::index(int it, int ix, int iy) const {
  const std::size_t per_row = region_.dim() == 1 ? (nx_ + 1) : static_cast<std::size_t>(nx_ + 1) * (nx_ + 1);
  return static_cast<std::size_t>(it) * per_row + (region_.dim() == 1 ? ix : static_cast<std::size_t>(ix) * (nx_ + 1) + iy);
}

SpaceTimePoint ParabolicBall::node(int it, int ix, int iy) const {
  const int n = region_.dim();
  SpaceTimePoint z;
  z.x = Vec(n);
  z.t = region_.pole().t - it * dt_;
  z.x[0] = region_.x_lo[0] + ix * dx_[0];
  if (n >= 2) z.x[1] = region_.x_lo[1] + iy * dx_[1];
  return z;
}

double ParabolicBall::h_value(int it, int ix, int iy) const { return h_[index(it, ix, iy)]; }

bool ParabolicBall::interior_at(double rho, int it, int ix, int iy) const {
  const double theta = -(region_.dim() + region_.m) * std::log(rho);
  return h_value(it, ix, iy) > theta;
}

std::size_t ParabolicBall::interior_count() const { return interior_count_at(region_.r); }

std::size_t ParabolicBall::interior_count_at(double rho) const {
  const double theta = -(region_.dim() + region_.m) * std::log(rho);
  std::size_t c = 0;
  for (double h : h_)
    if (h > theta) ++c;
  return c;
}

ParabolicBall extract_ball(const GammaField& field, double r, int grid_resolution, int m) {
  ParabolicBall ball(make_ball_region(field, r, m), grid_resolution, grid_resolution);
  if (ball.interior_count() == 0) throw std::runtime_error("extract_ball: degenerate ball (no interior grid point)");
  return ball;
}

// ---------------------------------------------------------------------------
// Sphere extraction
// ---------------------------------------------------------------------------

namespace {

// Bisect h(z(lambda)) - theta = 0 on the segment [za, zb] with h(za) > theta,
// h(zb) <= theta. Returns the interior-side iterate.
SpaceTimePoint bisect_crossing(const BallRegion& reg, SpaceTimePoint za, SpaceTimePoint zb) {
  for (int it = 0; it < 60; ++it) {
    SpaceTimePoint mid;
    mid.x = Vec(za.dim());
    for (int i = 0; i < za.dim(); ++i) mid.x[i] = 0.5 * (za.x[i] + zb.x[i]);
    mid.t = 0.5 * (za.t + zb.t);
    if (reg.level_value(mid) > reg.theta)
      za = mid;
    else
      zb = mid;
  }
  return za;
}

double default_grad_epsilon(const BallRegion& reg) {
  const int n = reg.dim();
  return 1e-10 * std::pow(reg.r, -(n + reg.m)) * n / reg.r;
}

void finalize_point(const GammaField& field, double grad_epsilon, SurfacePoint& sp) {
  const Vec g = field.grad_x(sp.p);
  const double gt = field.dt(sp.p);
  const double norm = std::sqrt(g.norm2() + gt * gt);
  if (norm < grad_epsilon || !std::isfinite(norm)) {
    sp.near_critical = true;
    sp.normal_x = Vec(sp.p.dim());
    sp.normal_t = 0.0;
  } else {
    sp.normal_x = (1.0 / norm) * g;
    sp.normal_t = gt / norm;
  }
}

struct EdgeKey {
  std::int64_t a, b;
  bool operator<(const EdgeKey& o) const { return a != o.a ? a < o.a : b < o.b; }
};

}  // namespace

LevelSurfaceMesh extract_sphere(const GammaField& field, double r, int grid_resolution, double grad_epsilon) {
  const BallRegion reg = make_ball_region(field, r, 0);
  const int n = reg.dim();
  if (n > 2) throw std::invalid_argument("extract_sphere: surface extraction supports N <= 2");
  if (grad_epsilon < 0.0) grad_epsilon = default_grad_epsilon(reg);
  const int nt = grid_resolution, nx = grid_resolution;
  ParabolicBall ball(reg, nt, nx);

  LevelSurfaceMesh mesh;
  std::map<EdgeKey, std::size_t> edge_points;

  const auto point_on_edge = [&](int ita, int ixa, int iya, int itb, int ixb, int iyb) -> std::size_t {
    // Node ids packed for the shared-edge cache.
    const std::int64_t stride = static_cast<std::int64_t>(nx + 1) * (nx + 1);
    const std::int64_t ida = ita * stride + ixa * (nx + 1) + iya;
    const std::int64_t idb = itb * stride + ixb * (nx + 1) + iyb;
    const EdgeKey key{std::min(ida, idb), std::max(ida, idb)};
    auto found = edge_points.find(key);
    if (found != edge_points.end()) return found->second;
    const bool a_in = ball.h_value(ita, ixa, iya) > reg.theta;
    SpaceTimePoint za = ball.node(ita, ixa, iya), zb = ball.node(itb, ixb, iyb);
    if (!a_in) std::swap(za, zb);
    SurfacePoint sp;
    sp.p = bisect_crossing(reg, za, zb);
    // Edges whose exterior end is the forced t = t0 row may hold no true
    // crossing: the level set closes through the pole itself. Snap those
    // points to z0 and flag them (the pole carries zero K-weight).
    const double lv = reg.level_value(sp.p);
    if (!(std::abs(lv - reg.theta) <= 1e-6 * (1.0 + std::abs(reg.theta)))) {
      sp.p = reg.pole();
      sp.near_critical = true;
      sp.normal_x = Vec(sp.p.dim());
      sp.normal_t = 0.0;
    } else {
      finalize_point(field, grad_epsilon, sp);
    }
    mesh.points.push_back(sp);
    edge_points.emplace(key, mesh.points.size() - 1);
    return mesh.points.size() - 1;
  };

  if (n == 1) {
    // Marching segments over (x, t) cells; crossings live on cell edges.
    for (int it = 0; it < nt; ++it) {
      for (int ix = 0; ix < nx; ++ix) {
        // Corners: (it,ix), (it,ix+1), (it+1,ix+1), (it+1,ix) — walk order.
        const int cs[4][2] = {{it, ix}, {it, ix + 1}, {it + 1, ix + 1}, {it + 1, ix}};
        std::vector<std::size_t> crossings;
        for (int e = 0; e < 4; ++e) {
          const int* a = cs[e];
          const int* b = cs[(e + 1) % 4];
          const bool ain = ball.h_value(a[0], a[1]) > reg.theta;
          const bool bin = ball.h_value(b[0], b[1]) > reg.theta;
          if (ain != bin) crossings.push_back(point_on_edge(a[0], a[1], 0, b[0], b[1], 0));
        }
        // Generic cells produce one chord; saddle cells produce two. A
        // flagged endpoint (pole closure point) passes its share to the
        // other end so no surface measure leaks out of the K-integral.
        for (std::size_t c = 0; c + 1 < crossings.size(); c += 2) {
          auto& pa = mesh.points[crossings[c]];
          auto& pb = mesh.points[crossings[c + 1]];
          const double dxs = pa.p.x[0] - pb.p.x[0], dts = pa.p.t - pb.p.t;
          const double len = std::sqrt(dxs * dxs + dts * dts);
          if (pa.near_critical && !pb.near_critical) {
            pb.weight += len;
          } else if (pb.near_critical && !pa.near_critical) {
            pa.weight += len;
          } else {
            pa.weight += 0.5 * len;
            pb.weight += 0.5 * len;
          }
        }
      }
    }
  } else {
    // Marching tetrahedra over (x, y, t) cubes: six tets per cube.
    static const int kTets[6][4][3] = {
        {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}}, {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {1, 1, 1}},
        {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 1, 1}}, {{0, 0, 0}, {0, 1, 0}, {0, 1, 1}, {1, 1, 1}},
        {{0, 0, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}}, {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 1, 1}}};
    const auto add_triangle = [&](std::size_t ia, std::size_t ib, std::size_t ic) {
      const auto& a = mesh.points[ia].p;
      const auto& b = mesh.points[ib].p;
      const auto& c = mesh.points[ic].p;
      const double u1 = b.x[0] - a.x[0], u2 = b.x[1] - a.x[1], u3 = b.t - a.t;
      const double v1 = c.x[0] - a.x[0], v2 = c.x[1] - a.x[1], v3 = c.t - a.t;
      const double cx = u2 * v3 - u3 * v2, cy = u3 * v1 - u1 * v3, ct = u1 * v2 - u2 * v1;
      const double area = 0.5 * std::sqrt(cx * cx + cy * cy + ct * ct);
      // Flagged corners pass their share to the unflagged ones.
      const std::size_t ids[3] = {ia, ib, ic};
      int live = 0;
      for (std::size_t id : ids)
        if (!mesh.points[id].near_critical) ++live;
      if (live == 0) {
        for (std::size_t id : ids) mesh.points[id].weight += area / 3.0;
        return;
      }
      for (std::size_t id : ids)
        if (!mesh.points[id].near_critical) mesh.points[id].weight += area / live;
    };
    for (int it = 0; it < nt; ++it) {
      for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < nx; ++iy) {
          // Skip cubes with uniform sign quickly.
          int inside = 0;
          for (int d = 0; d < 8; ++d)
            if (ball.h_value(it + (d & 1), ix + ((d >> 1) & 1), iy + ((d >> 2) & 1)) > reg.theta) ++inside;
          if (inside == 0 || inside == 8) continue;
          for (const auto& tet : kTets) {
            int vit[4], vix[4], viy[4];
            bool in[4];
            int count = 0;
            for (int v = 0; v < 4; ++v) {
              vit[v] = it + tet[v][0];
              vix[v] = ix + tet[v][1];
              viy[v] = iy + tet[v][2];
              in[v] = ball.h_value(vit[v], vix[v], viy[v]) > reg.theta;
              if (in[v]) ++count;
            }
            if (count == 0 || count == 4) continue;
            if (count == 1 || count == 3) {
              std::vector<std::size_t> pts;
              for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b)
                  if (in[a] != in[b])
                    pts.push_back(point_on_edge(vit[a], vix[a], viy[a], vit[b], vix[b], viy[b]));
              add_triangle(pts[0], pts[1], pts[2]);
            } else {
              // Two in, two out: the quad perimeter alternates the shared
              // tetrahedron vertices (i0,o0)-(i0,o1)-(i1,o1)-(i1,o0).
              int iv[2], ov[2], ni = 0, no = 0;
              for (int v = 0; v < 4; ++v) (in[v] ? iv[ni++] : ov[no++]) = v;
              const std::size_t q0 = point_on_edge(vit[iv[0]], vix[iv[0]], viy[iv[0]], vit[ov[0]], vix[ov[0]], viy[ov[0]]);
              const std::size_t q1 = point_on_edge(vit[iv[0]], vix[iv[0]], viy[iv[0]], vit[ov[1]], vix[ov[1]], viy[ov[1]]);
              const std::size_t q2 = point_on_edge(vit[iv[1]], vix[iv[1]], viy[iv[1]], vit[ov[1]], vix[ov[1]], viy[ov[1]]);
              const std::size_t q3 = point_on_edge(vit[iv[1]], vix[iv[1]], viy[iv[1]], vit[ov[0]], vix[ov[0]], viy[ov[0]]);
              add_triangle(q0, q1, q2);
              add_triangle(q0, q2, q3);
            }
          }
        }
      }
    }
  }

  for (const auto& sp : mesh.points) {
    mesh.total_measure += sp.weight;
    if (sp.near_critical) ++mesh.near_critical_count;
  }
  if (mesh.points.empty()) throw std::runtime_error("extract_sphere: no level crossings found");
  return mesh;
}

double level_curve_integral(const std::function<double(const SpaceTimePoint&)>& F,
                            const std::function<double(const SpaceTimePoint&)>& g, const Box& box, double level,
                            int nt, int nx) {
  if (box.dim() != 1) throw std::invalid_argument("level_curve_integral: N = 1 only");
  const double dt = (box.t_hi - box.t_lo) / nt;
  const double dx = (box.x_hi[0] - box.x_lo[0]) / nx;
  const auto node = [&](int it, int ix) { return SpaceTimePoint{Vec{box.x_lo[0] + ix * dx}, box.t_lo + it * dt}; };
  std::vector<double> vals((nt + 1) * (nx + 1));
  for (int it = 0; it <= nt; ++it)
    for (int ix = 0; ix <= nx; ++ix) vals[it * (nx + 1) + ix] = F(node(it, ix)) - level;

  const auto crossing = [&](int ita, int ixa, int itb, int ixb) {
    SpaceTimePoint za = node(ita, ixa), zb = node(itb, ixb);
    double fa = vals[ita * (nx + 1) + ixa];
    for (int it2 = 0; it2 < 50; ++it2) {
      SpaceTimePoint mid{Vec{0.5 * (za.x[0] + zb.x[0])}, 0.5 * (za.t + zb.t)};
      const double fm = F(mid) - level;
      if ((fm > 0) == (fa > 0)) {
        za = mid;
        fa = fm;
      } else {
        zb = mid;
      }
    }
    return za;
  };

  double acc = 0.0;
  for (int it = 0; it < nt; ++it) {
    for (int ix = 0; ix < nx; ++ix) {
      const int cs[4][2] = {{it, ix}, {it, ix + 1}, {it + 1, ix + 1}, {it + 1, ix}};
      std::vector<SpaceTimePoint> crossings;
      for (int e = 0; e < 4; ++e) {
        const int* a = cs[e];
        const int* b = cs[(e + 1) % 4];
        const double fa = vals[a[0] * (nx + 1) + a[1]];
        const double fb = vals[b[0] * (nx + 1) + b[1]];
        if ((fa > 0) != (fb > 0)) crossings.push_back(crossing(a[0], a[1], b[0], b[1]));
      }
      for (std::size_t c = 0; c + 1 < crossings.size(); c += 2) {
        const double dxs = crossings[c].x[0] - crossings[c + 1].x[0];
        const double dts = crossings[c].t - crossings[c + 1].t;
        const double len = std::sqrt(dxs * dxs + dts * dts);
        SpaceTimePoint mid{Vec{0.5 * (crossings[c].x[0] + crossings[c + 1].x[0])},
                           0.5 * (crossings[c].t + crossings[c + 1].t)};
        acc += len * g(mid);
      }
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Explicit ellipsoidal approximants
// ---------------------------------------------------------------------------

EllipsoidSlice ellipsoid_slice(const ParabolicOperator& op, const SpaceTimePoint& z0, double r, double t) {
  const double gap = z0.t - t;
  if (!(gap > 0.0)) throw std::domain_error("ellipsoid_slice: requires t < t0");
  if (!(r > 0.0)) throw std::invalid_argument("ellipsoid_slice: r must be positive");
  const int n = op.dim;
  const Mat a = op.a(z0);
  const double det_a = determinant(a);
  EllipsoidSlice slice;
  slice.center = z0.x;
  slice.a_inv = inverse(a);
  slice.rhs = -4.0 * gap * (std::log(2.0 / std::pow(r, n)) + 0.5 * std::log(det_a) + 0.5 * n * std::log(4.0 * kPi * gap));
  slice.empty = !(slice.rhs > 0.0);
  return slice;
}

double EllipsoidSlice::axis_halfwidth(int j) const {
  if (empty) return 0.0;
  return std::sqrt(rhs / a_inv(j, j));
}

double ellipsoid_depth(const ParabolicOperator& op, const SpaceTimePoint& z0, double r) {
  const int n = op.dim;
  const double det_a = determinant(op.a(z0));
  // rhs = 0  <=>  (4 pi s)^{n/2} = r^n / (2 sqrt(det A)).
  return std::pow(std::pow(r, n) / (2.0 * std::sqrt(det_a)), 2.0 / n) / (4.0 * kPi);
}

InclusionReport check_inclusion_lemma(const ParabolicOperator& op, const GammaField& field,
                                      const std::vector<double>& r_list, int grid_resolution) {
  InclusionReport rep;
  const SpaceTimePoint z0 = field.pole();
  const int n = field.dim();
  if (n != 1) throw std::invalid_argument("check_inclusion_lemma: grid check implemented for N = 1");
  for (double r : r_list) {
    InclusionRow row;
    row.r = r;
    // Scan box: the wider of Omega_{3r}^* and the ball envelope.
    const BallRegion reg = make_ball_region(field, r, 0);
    const double star_depth = ellipsoid_depth(op, z0, 3.0 * r);
    const double depth = std::max(reg.depth, star_depth);
    double halfw = reg.x_hi[0] - z0.x[0];
    for (int i = 1; i <= 100; ++i) {
      const EllipsoidSlice s = ellipsoid_slice(op, z0, 3.0 * r, z0.t - star_depth * i / 100.0);
      if (!s.empty) halfw = std::max(halfw, s.axis_halfwidth(0));
    }
    const double log_level = -n * std::log(r);
    for (int it = 1; it <= grid_resolution; ++it) {
      const double t = z0.t - depth * it / grid_resolution;
      for (int ix = 0; ix <= grid_resolution; ++ix) {
        const SpaceTimePoint z{Vec{z0.x[0] - halfw + 2.0 * halfw * ix / grid_resolution}, t};
        const double log_gamma = field.value(z) > 0.0 ? field.log_value(z) : kNegInf;
        const double log_zstar = std::log(parametrix_adjoint(op, z, z0));
        ++row.checked;
        // Inner: Z* >= 2/r^N  =>  Gamma > 1/r^N.
        if (log_zstar >= std::log(2.0) + (-n) * std::log(r)) {
          const double margin = log_gamma - log_level;
          row.worst_inner_margin = std::min(row.worst_inner_margin, margin);
          if (margin <= 0.0) row.inner_ok = false;
        }
        // Outer: Gamma > 1/r^N  =>  Z* >= 2/(3r)^N.
        if (log_gamma > log_level) {
          const double margin = log_zstar - (std::log(2.0) - n * std::log(3.0 * r));
          row.worst_outer_margin = std::min(row.worst_outer_margin, margin);
          if (margin < 0.0) row.outer_ok = false;
        }
      }
    }
    rep.rows.push_back(row);
  }
  std::vector<InclusionRow> sorted = rep.rows;
  std::sort(sorted.begin(), sorted.end(), [](const InclusionRow& a, const InclusionRow& b) { return a.r < b.r; });
  for (const auto& row : sorted) {
    if (row.inner_ok && row.outer_ok)
      rep.r_hat = row.r;
    else
      break;
  }
  return rep;
}

SpaceTimePoint parabolic_rescale(const SpaceTimePoint& z, const SpaceTimePoint& z0, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("parabolic_rescale: r must be positive");
  SpaceTimePoint out;
  out.x = Vec(z.dim());
  for (int i = 0; i < z.dim(); ++i) out.x[i] = z0.x[i] + r * z.x[i];
  out.t = z0.t + r * r * z.t;
  return out;
}

SpaceTimePoint parabolic_rescale_inverse(const SpaceTimePoint& z, const SpaceTimePoint& z0, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("parabolic_rescale_inverse: r must be positive");
  SpaceTimePoint out;
  out.x = Vec(z.dim());
  for (int i = 0; i < z.dim(); ++i) out.x[i] = (z.x[i] - z0.x[i]) / r;
  out.t = (z.t - z0.t) / (r * r);
  return out;
}

GradientEstimateReport check_gradient_estimate(const GammaField& field, double r,
                                               const std::vector<SpaceTimePoint>& samples) {
  GradientEstimateReport rep;
  const SpaceTimePoint& z0 = field.pole();
  const double theta = -field.dim() * std::log(r);
  for (const auto& z : samples) {
    if (!(field.log_value(z) > theta)) continue;  // outside Omega_r
    const double gap = z0.t - z.t;
    const double gamma = field.value(z);
    const Vec g = field.grad_x(z);
    const double dist = (z0.x - z.x).norm();
    const double bound = (dist / gap + 1.0) * gamma;
    for (int j = 0; j < field.dim(); ++j) rep.fitted_c = std::max(rep.fitted_c, std::abs(g[j]) / bound);
    ++rep.samples;
  }
  return rep;
}

}  // namespace pmvf
