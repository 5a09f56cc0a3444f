#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pmvf/geometry.hpp"

namespace pmvf {

using ScalarFn = std::function<double(const SpaceTimePoint&)>;
using VecFn = std::function<Vec(const SpaceTimePoint&)>;
using MatFn = std::function<Mat(const SpaceTimePoint&)>;

// Divergence-form parabolic operator
//   L u = div(A grad u) + <b, grad u> + c u - u_t
// with symmetric A. Coefficient fields are closed-form evaluators; the
// row-divergence da_j = sum_i d a_ij / d x_i and div b are supplied
// analytically by the scenario families, never differenced.
struct ParabolicOperator {
  int dim = 1;
  std::string family;  // catalog tag, informational
  MatFn a;
  VecFn da;
  VecFn b;
  ScalarFn div_b;
  ScalarFn c;
  double lambda = 1.0;        // spectral lower bound
  double Lambda = 1.5;        // spectral/coefficient upper bound, > lambda
  double holder_M = 0.0;      // Hoelder constant of (e-hc)
  double holder_alpha = 1.0;  // Hoelder exponent in (0,1]

  bool has_drift() const;      // b not identically supplied as zero
  bool has_zero_order() const; // c not identically supplied as zero
};

// Scalar field with optional analytic derivatives; central finite
// differences with steps h_space = fd_step*(1+|x|), h_time = fd_step*(1+|t|)
// fill in whatever is missing.
struct SolutionField {
  ScalarFn value;
  VecFn grad;    // optional
  MatFn hess;    // optional
  ScalarFn dt;   // optional
  double fd_step = 1e-4;
  std::string name;

  double operator()(const SpaceTimePoint& z) const { return value(z); }
  Vec gradient(const SpaceTimePoint& z) const;
  Mat hessian(const SpaceTimePoint& z) const;
  double time_derivative(const SpaceTimePoint& z) const;
};

// L u at z, expanding div(A grad u) = sum_j da_j du/dx_j + sum_ij a_ij d2u/dx_i dx_j.
double apply_operator(const ParabolicOperator& op, const SolutionField& u, const SpaceTimePoint& z);

// Transposed operator: L* v = div(A grad v) - <b, grad v> + (c - div b) v + v_t.
double apply_adjoint(const ParabolicOperator& op, const SolutionField& v, const SpaceTimePoint& z);

struct HolderQuotient {
  std::string field;       // "a", "da", "b", "div_b", "c"
  double worst = 0.0;      // sup |g(z)-g(zeta)| / parabolic-distance^alpha
  bool within_M = true;
};

struct HypothesisReport {
  double worst_asymmetry = 0.0;
  double worst_lower_violation = 0.0;  // max(0, lambda|xi|^2 - <A xi,xi>)
  double worst_upper_violation = 0.0;  // max(0, <A xi,xi> - Lambda|xi|^2)
  double worst_coeff_bound_violation = 0.0;  // |da|,|b_i|,|c| vs Lambda
  std::vector<HolderQuotient> holder;
  bool spectral_ok = true;
  bool coeff_bounds_ok = true;
  bool holder_ok = true;
  bool all_ok() const { return spectral_ok && coeff_bounds_ok && holder_ok && worst_asymmetry == 0.0; }
};

// Report-only verification of (e-up) and (e-hc) on the given samples
// (pairs for the Hoelder quotients, sample x direction for the spectral
// bounds). alpha is taken as declared, never fitted.
HypothesisReport verify_hypotheses(const ParabolicOperator& op, const std::vector<SpaceTimePoint>& samples,
                                   const std::vector<Vec>& directions);

}  // namespace pmvf
