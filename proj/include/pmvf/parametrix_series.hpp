#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "pmvf/fundamental_solution.hpp"
#include "pmvf/operator_model.hpp"

namespace pmvf {

struct SeriesConfig {
  int k_max = 3;                   // truncation order K
  int time_nodes = 28;             // Volterra time nodes per evaluation
  int space_nodes = 56;            // mapped spatial nodes per time node
  double space_width_sigmas = 8.0; // envelope half-width in product widths
  double horizon = 1.0;            // T: maximal t0 - t served by the field
  double lambda_plus = 0.0;        // Gamma^+ parameter; 0 -> 1.1 * Lambda
  double c_tilde = 0.0;            // LZ envelope constant; 0 -> fitted
  int lattice_time_nodes = 44;     // memo lattice for (LZ)_k, k >= 2
  int lattice_space_nodes = 176;
  double lattice_u_max = 8.0;      // lattice extent in units of sqrt(s - tau)
};

// LZ(z; zeta) = div[(A(z) - A(zeta)) grad_x Z(z; zeta)], expanded with the
// analytic Gaussian derivatives and the analytic row-divergence of A.
// Requires b = c = 0 (the remaining terms of the full operator vanish).
double lz(const ParabolicOperator& op, const SpaceTimePoint& z, const SpaceTimePoint& zeta);

// (LZ)_k by direct nested product quadrature (open rules, graded at both
// endpoints). k = 1 returns lz. Dimension 1 only for k >= 2.
double lz_iterate(const ParabolicOperator& op, int k, const SpaceTimePoint& z, const SpaceTimePoint& zeta,
                  const SeriesConfig& cfg);

struct LzIterateDiag {
  double value = 0.0;
  double refined = 0.0;       // value at 1.5x node counts
  double disagreement = 0.0;  // |value - refined|
  bool under_resolved = false;
};
LzIterateDiag lz_iterate_checked(const ParabolicOperator& op, int k, const SpaceTimePoint& z,
                                 const SpaceTimePoint& zeta, const SeriesConfig& cfg, double tolerance);

// One-shot evaluation Gamma_K(z0; z) with its certified truncation bound.
// Builds the series field internally; hold a SeriesGammaField for repeated
// evaluation at the same pole.
std::pair<double, double> gamma_series(const ParabolicOperator& op, const SpaceTimePoint& z0,
                                       const SpaceTimePoint& z, const SeriesConfig& cfg);

// Majorant tail sum_{k>=k0} (GammaE(alpha/2) c_tilde)^k / GammaE(alpha k/2)
// * dt^{k alpha/2 - 1} * norm_const; finite by the factorial growth of GammaE.
double tail_bound(int k0, double dt, double alpha, double c_tilde, double norm_const = 1.0);

// Variable-coefficient fundamental solution Gamma(z0; z) as a truncated
// parametrix series, adjoint orientation (pole above, field point below).
// The series is built for the time-reflected transposed operator; with
// b = c = 0 and time-independent A that operator coincides with L itself.
// Dimension 1.
class SeriesGammaField final : public GammaField {
 public:
  SeriesGammaField(const ParabolicOperator& op, SpaceTimePoint pole, SeriesConfig cfg);
  ~SeriesGammaField() override;

  double value(const SpaceTimePoint& z) const override;
  Vec grad_x(const SpaceTimePoint& z) const override;
  double series_tail_bound(double gap) const override;
  double envelope_lambda_plus() const override;
  double envelope_c_plus() const override;

  // Partial sum Gamma_K = Z + sum_{k<=K} int int Z (LZ)_k, K <= cfg.k_max.
  double value_truncated(const SpaceTimePoint& z, int K) const;
  // Parametrix Z*(z; z0) in the field orientation (the K = 0 term).
  double parametrix_value(const SpaceTimePoint& z) const;

  double fitted_c_tilde() const;
  const SeriesConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct PdeResidualReport {
  std::vector<double> max_residual_by_k;  // index = truncation order K
  bool monotone_decreasing = true;
};

// Finite-difference application of the transposed operator to
// z -> Gamma_K(z0; z) on the samples, for K = 0..k_max.
PdeResidualReport check_pde_residual(const SeriesGammaField& field, const ParabolicOperator& op,
                                     const std::vector<SpaceTimePoint>& samples);

struct GlobalBoundsReport {
  double fitted_c_plus = 0.0;  // sup Gamma / Gamma^+ over samples
  struct MassRow {
    double gap = 0.0;       // t0 - t
    double mass = 0.0;      // int Gamma(z0; (x,t)) dx
    double lower = 0.0;     // e^{-Lambda gap}
    double upper = 0.0;     // e^{+Lambda gap}
    bool within = false;
  };
  std::vector<MassRow> mass;
  bool mass_ok = true;
};

GlobalBoundsReport check_global_bounds(const GammaField& field, const ParabolicOperator& op,
                                       const std::vector<SpaceTimePoint>& samples, const std::vector<double>& gaps,
                                       int mass_nodes = 2000);

struct DiagonalRatioReport {
  double eta = 0.0;
  double c_eta = 0.0;          // smallest threshold that works on the samples
  bool found = false;          // false when no threshold separates the samples
  double worst_ratio_low = 1.0, worst_ratio_high = 1.0;  // over Z > c_eta
  size_t samples_above = 0;
};

// Scans thresholds over the sampled parametrix values and reports the
// smallest C_eta with (1-eta) <= Gamma/Z <= (1+eta) whenever Z > C_eta.
DiagonalRatioReport check_diagonal_ratio(const GammaField& field, const ParabolicOperator& op, double eta,
                                         const std::vector<SpaceTimePoint>& samples);

}  // namespace pmvf
