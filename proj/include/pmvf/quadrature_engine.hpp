#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmvf/level_set_geometry.hpp"

namespace pmvf {

struct QuadratureConfig {
  int time_slabs = 160;          // graded main slabs on [eps0, depth]
  int eps_sub_slabs = 12;        // sqrt-graded sub-slabs per dyadic eps slab
  int eps_k_max = 26;            // eps_k = eps0 2^{-k}, k = 0..eps_k_max
  double eps0_fraction = 0.125;  // eps0 = depth/8
  bool extrapolate = true;       // Aitken limit of I(eps_k)
  int slice_scan = 96;           // N=1: bracketing scan nodes per slice
  int slice_simpson = 25;        // N=1: Simpson points per interior run (odd)
  int slice_raster = 128;        // N=2: marching-squares raster per slab
  int slice_raster_3d = 40;      // N=3: occupancy raster per slab
  long long mc_samples = 200000;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

using Integrand = std::function<double(const SpaceTimePoint&)>;

struct VolumeResult {
  double value = 0.0;                // extrapolated (or last) eps-cut value
  double increment = 0.0;            // |I(eps_last) - I(eps_prev)|
  std::vector<double> eps;           // the cut sequence
  std::vector<double> i_eps;         // I(eps_k)
  bool diverged = false;             // increments growing (non-integrable)
  bool extrapolated = false;
};

// Integral of `integrand` over the super-level region, computed as
// I(eps_k) over {t < t0 - eps_k} on graded time slabs with per-slab slice
// quadrature, then extrapolated as eps -> 0. Every evaluation point is
// strictly interior to the region.
VolumeResult volume_integral(const BallRegion& region, const Integrand& integrand, const QuadratureConfig& cfg);
VolumeResult volume_integral(const ParabolicBall& ball, const Integrand& integrand, const QuadratureConfig& cfg);

// Weighted sum over non-critical mesh points (critical points carry zero
// K-weight by convention); deterministic index order.
double surface_integral(const LevelSurfaceMesh& mesh, const Integrand& integrand);

// Radial chain: int_0^r weight(rho) * [volume_integral over Omega_rho^{(m)}
// of inner(rho, .)] drho, with rho-nodes graded toward 0. Degenerate inner
// regions at tiny rho are skipped and counted.
struct RadialResult {
  double value = 0.0;
  int skipped_nodes = 0;
};
RadialResult radial_profile_integral(const GammaField& field, int m,
                                     const std::function<double(double, const SpaceTimePoint&)>& inner_integrand,
                                     const std::function<double(double)>& weight, double r, int nodes,
                                     const QuadratureConfig& cfg);

struct CoareaReport {
  double lhs = 0.0;  // int_box g |grad G| dz
  double rhs = 0.0;  // int (int_{G=y} g dH^{n-1}) dy over the level list
  double relative_discrepancy = 0.0;
};

// Two-route coarea consistency check, N = 1 (the box lives in (x,t)).
// grad_G must return the full space-time gradient norm |grad_{(x,t)} G|.
CoareaReport coarea_check(const std::function<double(const SpaceTimePoint&)>& G,
                          const std::function<double(const SpaceTimePoint&)>& grad_norm_G, const Integrand& g,
                          const Box& box, const std::vector<double>& level_list, const QuadratureConfig& cfg);

struct McResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  long long hits = 0;
  bool zero_hits = false;
};

// Uniform sampling over the box; unbiased estimate of int indicator * f.
// Bit-reproducible for a fixed seed.
McResult montecarlo_oracle(const std::function<bool(const SpaceTimePoint&)>& indicator, const Integrand& integrand,
                           const Box& box, long long n, std::uint64_t seed);

}  // namespace pmvf
