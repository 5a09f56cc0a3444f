#pragma once

#include <optional>
#include <string>

#include "pmvf/quadrature_engine.hpp"

namespace pmvf {

// Kernels of the mean value formulas, all built on Gamma(z0; .):
//   K = <A grad_x Gamma, grad_x Gamma> / |grad_{(x,t)} Gamma|   (0 at critical points)
//   M = <A grad_x Gamma, grad_x Gamma> / Gamma^2
// plus the m-extended family N_r, M_r^{(m)}, W_r^{(m)}.
class KernelEvaluator {
 public:
  KernelEvaluator(const GammaField& field, const ParabolicOperator& op, double grad_epsilon = -1.0);

  const GammaField& field() const { return *field_; }
  const ParabolicOperator& op() const { return *op_; }
  double grad_epsilon() const { return grad_epsilon_; }

  double kernel_K(const SpaceTimePoint& z) const;
  double kernel_M(const SpaceTimePoint& z) const;

  struct Extended {
    double n_r = 0.0;
    double m_rm = 0.0;
    double w_rm = 0.0;
  };
  // Requires z in Omega_r^{(m)}(z0); throws std::domain_error outside
  // (negative radicand).
  Extended kernel_extended(const SpaceTimePoint& z, double r, int m) const;

 private:
  const GammaField* field_;
  const ParabolicOperator* op_;
  double grad_epsilon_;
};

struct MeanValueConfig {
  int sphere_resolution = 420;
  int ball_resolution = 300;
  int rho_nodes = 48;
  QuadratureConfig quad;
};

struct MeanValueReport {
  std::string formula;  // "surface" | "volume" | "extended"
  double r = 0.0;
  int m = 0;
  double u0 = 0.0;           // u(z0)
  double kernel_term = 0.0;  // surface K-term or volume M-term
  double f_term = 0.0;
  double drift_term = 0.0;   // (div b - c) u term
  double residual = 0.0;     // u0 - sum of terms
  double quad_increment = 0.0;
  std::size_t mesh_points = 0;
};

// u(z0) = int_{psi_r} K u dH^N + int_{Omega_r} f (1/r^N - Gamma) dz
//        + (1/r^N) int_{Omega_r} (div b - c) u dz.
MeanValueReport surface_mean_value(const SolutionField& u, const SolutionField* f, const ParabolicOperator& op,
                                   const KernelEvaluator& ev, double r, const MeanValueConfig& cfg);

// u(z0) = (1/r^N) int_{Omega_r} M u dz
//        + (N/r^N) int_0^r rho^{N-1} int_{Omega_rho} f (1/rho^N - Gamma) dz drho
//        + (N/r^N) int_0^r (1/rho) int_{Omega_rho} (div b - c) u dz drho.
MeanValueReport volume_mean_value(const SolutionField& u, const SolutionField* f, const ParabolicOperator& op,
                                  const KernelEvaluator& ev, double r, const MeanValueConfig& cfg);

// The order-m extension (m >= 1):
// u(z0) = (1/r^{N+m}) int_{Omega_r^{(m)}} M_r^{(m)} u dz
//        + ((N+m)/r^{N+m}) int_0^r rho^{N+m-1} int_{Omega_rho^{(m)}} W_rho^{(m)} f dz drho
//        + ((N+m)/r^{N+m}) int_0^r (omega_m/rho) int_{Omega_rho^{(m)}} N_rho^m (div b - c) u dz drho.
MeanValueReport extended_mean_value(const SolutionField& u, const SolutionField* f, const ParabolicOperator& op,
                                    const KernelEvaluator& ev, double r, int m, const MeanValueConfig& cfg);

// sup of M_r^{(m)} over the interior grid of Omega_r^{(m)} (boundedness scan).
double extended_kernel_sup(const KernelEvaluator& ev, double r, int m, int grid_resolution);

}  // namespace pmvf
