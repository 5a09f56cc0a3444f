#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmvf/fundamental_solution.hpp"
#include "pmvf/operator_model.hpp"

namespace pmvf {

// Level description shared by the plain and m-extended parabolic balls:
// interior of Omega_r^{(m)}(z0)  <=>  h(z) > theta(r), where
//   h(z) = log Gamma(z0; z) - (m/2) log(4 pi (t0 - t)),
//   theta(r) = -(N+m) log r.
// Storing h makes reclassification at nested radii a comparison, not a
// field evaluation.
struct BallRegion {
  const GammaField* field = nullptr;
  double r = 0.0;
  int m = 0;
  double depth = 0.0;   // time extent: interior lives in t0 - depth < t < t0
  Vec x_lo, x_hi;       // spatial bounding box
  double theta = 0.0;   // level threshold in h-units

  int dim() const { return field->dim(); }
  const SpaceTimePoint& pole() const { return field->pole(); }
  double level_value(const SpaceTimePoint& z) const;  // h(z); -inf at t >= t0
  bool interior(const SpaceTimePoint& z) const { return level_value(z) > theta; }
};

// Bounding box and depth from the envelope Gamma <= C+ Gamma^+ (the Gamma^+
// level set solves in closed form). Throws when r yields an empty envelope.
BallRegion make_ball_region(const GammaField& field, double r, int m);

// Super-level region with a classification grid (nt time rows below t0,
// nx nodes per spatial axis). Row it = 0 sits at t0 and is forced exterior;
// h is cached at every node.
class ParabolicBall {
 public:
  ParabolicBall(BallRegion region, int nt, int nx);

  const BallRegion& region() const { return region_; }
  const GammaField& field() const { return *region_.field; }
  double r() const { return region_.r; }
  int m() const { return region_.m; }
  int dim() const { return region_.dim(); }
  int nt() const { return nt_; }
  int nx() const { return nx_; }

  SpaceTimePoint node(int it, int ix, int iy = 0) const;
  double h_value(int it, int ix, int iy = 0) const;
  bool interior(int it, int ix, int iy = 0) const { return h_value(it, ix, iy) > region_.theta; }
  // Reclassification at a nested radius rho <= r.
  bool interior_at(double rho, int it, int ix, int iy = 0) const;

  std::size_t interior_count() const;
  std::size_t interior_count_at(double rho) const;

 private:
  BallRegion region_;
  int nt_ = 0, nx_ = 0;
  double dt_ = 0.0;
  Vec dx_;
  std::vector<double> h_;  // [(it * nx+1-rows) ...] dense node cache
  std::size_t index(int it, int ix, int iy) const;
};

ParabolicBall extract_ball(const GammaField& field, double r, int grid_resolution, int m = 0);

struct SurfacePoint {
  SpaceTimePoint p;
  Vec normal_x;        // spatial part of the unit inner normal
  double normal_t = 0.0;
  double weight = 0.0;  // Hausdorff measure carried by the point
  bool near_critical = false;
};

struct LevelSurfaceMesh {
  std::vector<SurfacePoint> points;
  double total_measure = 0.0;
  std::size_t near_critical_count = 0;
};

// psi_r(z0) as a refined marching mesh: segments on the (x,t) grid for N = 1,
// marching tetrahedra on the (x1,x2,t) grid for N = 2. Crossings are located
// by bisection along grid edges; each crossing point accumulates half the
// incident segment length (a third of each incident triangle area).
// Points with |grad_{(x,t)} Gamma| below grad_epsilon are flagged
// near-critical; surface_integral gives them zero K-weight.
LevelSurfaceMesh extract_sphere(const GammaField& field, double r, int grid_resolution,
                                double grad_epsilon = -1.0);

// Generic marching of {F = level} inside a box (N = 1), returning the
// g-weighted measure of the level curve. Shared by the coarea check.
double level_curve_integral(const std::function<double(const SpaceTimePoint&)>& F,
                            const std::function<double(const SpaceTimePoint&)>& g, const Box& box, double level,
                            int nt, int nx);

struct EllipsoidSlice {
  bool empty = true;
  Vec center;
  Mat a_inv;     // quadratic form of the slice
  double rhs = 0.0;  // <A^{-1}(x-x0), x-x0> <= rhs
  double axis_halfwidth(int j) const;
};

// x-slice of the explicit set Omega_r^*(z0) at time t < t0.
EllipsoidSlice ellipsoid_slice(const ParabolicOperator& op, const SpaceTimePoint& z0, double r, double t);

// Depth (in t0 - t) of Omega_r^*(z0).
double ellipsoid_depth(const ParabolicOperator& op, const SpaceTimePoint& z0, double r);

struct InclusionRow {
  double r = 0.0;
  bool inner_ok = true;   // Omega_r^* subset Omega_r
  bool outer_ok = true;   // Omega_r subset Omega_{3r}^*
  std::size_t checked = 0;
  double worst_inner_margin = 0.0;  // most negative log Gamma - log level over Omega_r^*
  double worst_outer_margin = 0.0;
};

struct InclusionReport {
  std::vector<InclusionRow> rows;
  double r_hat = 0.0;  // largest r with every r' <= r in the list passing
};

InclusionReport check_inclusion_lemma(const ParabolicOperator& op, const GammaField& field,
                                      const std::vector<double>& r_list, int grid_resolution);

// (xi, tau) -> (x0 + r xi, t0 + r^2 tau) and its exact inverse.
SpaceTimePoint parabolic_rescale(const SpaceTimePoint& z, const SpaceTimePoint& z0, double r);
SpaceTimePoint parabolic_rescale_inverse(const SpaceTimePoint& z, const SpaceTimePoint& z0, double r);

struct GradientEstimateReport {
  double fitted_c = 0.0;  // sup |d_j Gamma| / ((|x0-x|/(t0-t) + 1) Gamma)
  std::size_t samples = 0;
};

GradientEstimateReport check_gradient_estimate(const GammaField& field, double r,
                                               const std::vector<SpaceTimePoint>& samples);

}  // namespace pmvf
