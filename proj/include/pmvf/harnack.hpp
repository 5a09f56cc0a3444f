#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pmvf/mean_value.hpp"

namespace pmvf {

// Factory producing the pole-fixed fundamental solution for a given center;
// the Harnack machinery needs Gamma(z; .) at many centers z.
using FieldFactory = std::function<std::unique_ptr<GammaField>(const SpaceTimePoint&)>;

enum class CylinderKind { Full, Lower, Upper, Slice };

// Q_r(z0), Q^-_r, Q^+_r and the slice D_r of the corollary machinery.
struct Cylinder {
  SpaceTimePoint center;
  double r = 1.0;
  CylinderKind kind = CylinderKind::Full;
  double iota = 0.25, kappa = 0.5, mu = 0.75, theta = 0.5;  // Lower/Upper shape
  double kappa1 = 0.0, theta1 = 0.0;                        // Slice shape

  bool contains(const SpaceTimePoint& z) const;
};

struct KrmRegion {
  std::vector<SpaceTimePoint> points;  // grid closure of the compact set
  double cut_gap = 0.0;                // r^2 / (4 pi lambda^{N/(N+m)})
  bool empty = true;
};

// K_r^{(m)}(z0) = closure(Omega_r^{(m)}(z0)) cap {t <= t0 - cut_gap},
// classified at grid resolution (half-cell time slack, one-cell level slack
// so closure boundary points are retained).
KrmRegion compact_set_krm(const GammaField& field, double r, int m, double lambda, int grid_resolution);

struct HarnackConstants {
  int m = 3;
  double r = 0.0;        // radius the constants were assembled at
  double m_plus = 0.0;   // empirical sup of M_{theta r}^{(m)}  (claim ii)
  double m_minus = 0.0;  // closed form                     (claim iv)
  double theta = 0.0;    // inclusion scan                  (claim iii)
  double c_k = 0.0;      // 5^{N+m} M+ / (theta^{N+m} m-)
  double kappa1 = 0.0, theta1 = 0.0, c_d = 0.0;  // slice constants
  double r0 = 0.0, r1 = 0.0, r_star = 0.0;       // empirical thresholds
};

// m^- = lambda^{-N(m-2)/(N+m)} (m omega_m/(m+2)) (r^{2m-4}/(2 pi)^{m-2})
//       ((N+m) log(5/4))^{(m+2)/2}.
double closed_form_m_minus(int n, int m, double lambda, double r);

double assemble_c_k(int n, int m, double m_plus, double theta, double m_minus);

// Claims ii/iii machinery: scans theta over {0.9, 0.8, ..., 0.1}, keeps the
// largest value with Omega_{theta r}^{(m)}(z) inside Omega_{4r}^{(m)}(z0)
// below the time cut for all sampled z in K_r^{(m)}(z0) and all r in r_list;
// then M+ is the grid sup of M_{theta r}^{(m)} over Omega_{theta r}^{(m)}.
// m^- and C_K are assembled at min(r_list).
HarnackConstants compute_constants(const ParabolicOperator& op, const FieldFactory& factory,
                                   const SpaceTimePoint& z0, int m, const std::vector<double>& r_list,
                                   int grid_resolution);

// Picks (kappa1, theta1) with kappa1 above the cut coefficient and the
// largest theta1 whose slice centers all satisfy the ball-inclusion step of
// the proof; sets C_D from the C_K formula at the same radius.
void fit_slice_constants(const ParabolicOperator& op, const FieldFactory& factory, const SpaceTimePoint& z0,
                         double r, int grid_resolution, HarnackConstants& constants);

struct BallHarnackReport {
  double sup_u = 0.0;
  double u0 = 0.0;
  double ratio = 0.0;  // sup / u0
  double c_k = 0.0;
  bool within = false;
  std::size_t points = 0;
};

// sup over the K_r^{(m)} grid of u against C_K u(z0); requires u(z0) > 0.
BallHarnackReport harnack_ball_check(const SolutionField& u, const GammaField& field, double r, int m, double lambda,
                                     const HarnackConstants& constants, int grid_resolution);

struct HarnackChain {
  SpaceTimePoint z_plus, z_minus;
  double r = 0.0;
  Vec y;
  int m = 0;
  std::vector<SpaceTimePoint> points;  // w_0 .. w_m
  bool small_slope = true;
};

// w_j = (x+ + j r y, t+ - j kappa1 r^2) with the case-dependent integer m of
// the proof; endpoints reproduce exactly, |y| <= theta1 and r <= r0.
HarnackChain build_chain(const SpaceTimePoint& z_plus, const SpaceTimePoint& z_minus, double r0, double kappa1,
                         double theta1);

struct InvariantHarnackReport {
  double sup_lower = 0.0;   // sup over Q^-
  double inf_upper = 0.0;   // inf over Q^+
  double log_ratio = 0.0;   // log(sup/inf)
  double log_c_h = 0.0;     // log of the assembled constant
  double r0 = 0.0;
  bool within = false;
  struct ChainRow {
    int m = 0;
    double r = 0.0;
    bool small_slope = true;
    double log_u_minus = 0.0, log_u_plus = 0.0;
    bool chain_bound_ok = false;  // u(z-) <= C_D^m u(z+)
    bool membership_ok = false;   // w_j in D_r(w_{j-1})
    bool cylinders_ok = false;    // Q_r(w_j) in Q_1(0), normalized units
  };
  std::vector<ChainRow> chains;
  bool all_chains_ok = true;
};

// Normalizes the cylinder to Q_1(0), builds chains for the given endpoint
// pairs (normalized coordinates), checks the chain-wise and sup/inf bounds
// with C_H = exp(max{1/(kappa1 r0^2), 4 kappa1/(theta1^2 (kappa-iota))} log C_D).
InvariantHarnackReport invariant_harnack_check(const SolutionField& u, const SpaceTimePoint& z0, double r,
                                               const Cylinder& lower, const Cylinder& upper,
                                               const HarnackConstants& constants,
                                               const std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>>&
                                                   endpoint_pairs_normalized,
                                               int grid_resolution);

}  // namespace pmvf
