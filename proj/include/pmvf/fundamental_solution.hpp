#pragma once

#include <memory>

#include "pmvf/gaussian_core.hpp"
#include "pmvf/geometry.hpp"

namespace pmvf {

// Pole-fixed fundamental solution Gamma(z0; z), evaluated in the adjoint
// orientation: the pole z0 = (x0,t0) sits above, the field point z = (x,t)
// has t < t0. Equivalently Gamma(z0; z) = Gamma*(z; z0), the fundamental
// solution of the transposed operator with pole z0.
//
// Implementations: exact Gaussian for constant A, truncated parametrix
// series otherwise. Everything downstream (level sets, kernels, mean value
// formulas) consumes this interface.
class GammaField {
 public:
  virtual ~GammaField() = default;

  const SpaceTimePoint& pole() const { return pole_; }
  int dim() const { return pole_.dim(); }

  virtual double value(const SpaceTimePoint& z) const = 0;
  virtual double log_value(const SpaceTimePoint& z) const;
  virtual Vec grad_x(const SpaceTimePoint& z) const;  // finite-difference fallback
  virtual double dt(const SpaceTimePoint& z) const;   // finite-difference fallback

  // Certified truncation bound as a function of the time gap t0 - t
  // (zero for exact fields).
  virtual double series_tail_bound(double /*gap*/) const { return 0.0; }

  // Envelope Gamma(z0; z) <= c_plus * Gamma^+ with parameter lambda_plus;
  // used to derive bounding boxes for the parabolic balls.
  virtual double envelope_lambda_plus() const = 0;
  virtual double envelope_c_plus() const = 0;

  // |grad_{(x,t)} Gamma| — the norm used by the K kernel and surface normals.
  double grad_xt_norm(const SpaceTimePoint& z) const;

 protected:
  explicit GammaField(SpaceTimePoint pole) : pole_(std::move(pole)) {}
  // Positive time gap t0 - t; throws on wrong order.
  double gap_checked(const SpaceTimePoint& z) const;

 private:
  SpaceTimePoint pole_;
};

// Exact field for constant coefficients: Gaussian matrix A plus optional
// constant drift b and zero-order rate c,
//   Gamma(z0; z) = e^{c (t0-t)} Gamma_A((x0 - x) + b (t0-t); t0-t).
class ConstantGammaField final : public GammaField {
 public:
  ConstantGammaField(const Mat& a, SpaceTimePoint pole) : GammaField(std::move(pole)), spec_(a), drift_(spec_.dim()) {}
  ConstantGammaField(const Mat& a, Vec drift, double rate, SpaceTimePoint pole)
      : GammaField(std::move(pole)), spec_(a), drift_(std::move(drift)), rate_(rate) {}

  const GaussianKernelSpec& spec() const { return spec_; }

  double value(const SpaceTimePoint& z) const override;
  double log_value(const SpaceTimePoint& z) const override;
  Vec grad_x(const SpaceTimePoint& z) const override;
  double dt(const SpaceTimePoint& z) const override;
  double envelope_lambda_plus() const override;
  double envelope_c_plus() const override;

 private:
  // Shifted displacement w = (x0 - x) + b gap as a forward evaluation pair.
  std::pair<SpaceTimePoint, SpaceTimePoint> forward_pair(const SpaceTimePoint& z) const;
  GaussianKernelSpec spec_;
  Vec drift_;
  double rate_ = 0.0;
};

}  // namespace pmvf
