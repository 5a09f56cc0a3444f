#pragma once

#include <utility>
#include <vector>

#include "pmvf/geometry.hpp"
#include "pmvf/operator_model.hpp"

namespace pmvf {

// Constant-coefficient Gaussian kernel
//   Gamma_A(z; zeta) = (4 pi (t-tau))^{-N/2} (det A)^{-1/2}
//                      exp(-<A^{-1}(x-xi), x-xi> / (4(t-tau))),  t > tau,
// with cached inverse/determinant and analytic derivatives in the first
// argument. Also used (frozen at a point) as the parametrix Z and, with
// reflected time, as the adjoint parametrix Z*.
class GaussianKernelSpec {
 public:
  explicit GaussianKernelSpec(const Mat& a);

  int dim() const { return a_.size(); }
  const Mat& a() const { return a_; }
  const Mat& a_inv() const { return a_inv_; }
  double det_a() const { return det_a_; }

  double value(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const;
  double log_value(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const;
  Vec grad_x(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const;
  Mat hess_x(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const;
  double dt(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const;

  // Largest eigenvalue of A; envelope constants Gamma_A <= c_plus * Gamma^+.
  double max_eigenvalue() const { return eig_max_; }
  double envelope_lambda_plus() const { return eig_max_; }
  double envelope_c_plus() const;

 private:
  static double check_order(const SpaceTimePoint& z, const SpaceTimePoint& zeta);
  Mat a_, a_inv_;
  double det_a_ = 0.0;
  double eig_max_ = 0.0;
};

double sym_max_eigenvalue(const Mat& a);

double gamma_const(const GaussianKernelSpec& spec, const SpaceTimePoint& z, const SpaceTimePoint& zeta);

// Fundamental solution of LambdaPlus * Laplace - d/dt (scalar comparison kernel).
double gamma_plus(double lambda_plus, const SpaceTimePoint& z, const SpaceTimePoint& zeta);
double log_gamma_plus(double lambda_plus, const SpaceTimePoint& z, const SpaceTimePoint& zeta);

// Parametrix Z(z; zeta) = Gamma_{A(zeta)}(z; zeta), t > tau.
double parametrix(const ParabolicOperator& op, const SpaceTimePoint& z, const SpaceTimePoint& zeta);
// Adjoint parametrix Z*(z; zeta), tau > t, frozen at zeta with time gap tau - t.
double parametrix_adjoint(const ParabolicOperator& op, const SpaceTimePoint& z, const SpaceTimePoint& zeta);

struct ReproductionResult {
  double integral = 0.0;
  double reference = 0.0;
  double residual = 0.0;
  double tail_bound = 0.0;
  bool domain_warning = false;  // quadrature box small relative to Gaussian width
};

struct QuadratureConfig;  // quadrature_engine.hpp

// Checks the semigroup identity int Gamma_A(x,t;y,s) Gamma_A(y,s;xi,tau) dy
// = Gamma_A(z;zeta) by truncated tensor-trapezoid quadrature, tau < s < t.
ReproductionResult check_reproduction(const GaussianKernelSpec& spec, const SpaceTimePoint& z,
                                      const SpaceTimePoint& zeta, double s, int nodes_per_axis = 96);

struct DerivativeBoundReport {
  double empirical_c_first = 0.0;   // sup |dGamma/dx_j| sqrt(t-tau) / Gamma^+
  double empirical_c_second = 0.0;  // sup |d2Gamma/dx_i dx_j| (t-tau) / Gamma^+
  double empirical_c = 0.0;         // max of the two
  bool declared_ok = true;          // declared C+ >= empirical
};

DerivativeBoundReport check_gaussian_derivative_bounds(
    const GaussianKernelSpec& spec, double lambda_plus, double declared_c_plus,
    const std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>>& samples);

}  // namespace pmvf
