#include "pmvf/gaussian_core.hpp"

#include <cmath>
#include <stdexcept>

namespace pmvf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double sym_max_eigenvalue(const Mat& a) {
  const int n = a.size();
  if (n == 1) return a(0, 0);
  if (n == 2) {
    const double tr = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    return 0.5 * tr + disc;
  }
  // n == 3: power iteration on A + shift to force positivity of the target.
  double shift = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(a(i, j));
    shift = std::max(shift, row);
  }
  Vec v(n, 1.0);
  v[1] = 0.7;
  v[2] = 0.3;
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vec w = a.apply(v);
    for (int i = 0; i < n; ++i) w[i] += shift * v[i];
    const double nw = w.norm();
    if (nw == 0.0) break;
    w *= 1.0 / nw;
    lam = nw;
    v = w;
  }
  return lam - shift;
}

double GaussianKernelSpec::check_order(const SpaceTimePoint& z, const SpaceTimePoint& zeta) {
  const double gap = z.t - zeta.t;
  if (!(gap > 0.0)) throw std::domain_error("gaussian kernel: requires t > tau");
  return gap;
}

GaussianKernelSpec::GaussianKernelSpec(const Mat& a) : a_(a) {
  if (a.max_asymmetry() != 0.0) throw std::invalid_argument("GaussianKernelSpec: matrix must be symmetric");
  det_a_ = determinant(a);
  if (!(det_a_ > 0.0)) throw std::invalid_argument("GaussianKernelSpec: det A must be positive");
  a_inv_ = inverse(a);
  eig_max_ = sym_max_eigenvalue(a);
}

double GaussianKernelSpec::log_value(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const {
  const double s = check_order(z, zeta);
  const Vec d = z.x - zeta.x;
  const double q = quad_form(a_inv_, d);
  return -0.5 * dim() * std::log(4.0 * kPi * s) - 0.5 * std::log(det_a_) - q / (4.0 * s);
}

double GaussianKernelSpec::value(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const {
  return std::exp(log_value(z, zeta));
}

Vec GaussianKernelSpec::grad_x(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const {
  const double s = check_order(z, zeta);
  const Vec d = z.x - zeta.x;
  const double g = value(z, zeta);
  Vec out = a_inv_.apply(d);
  out *= -g / (2.0 * s);
  return out;
}

Mat GaussianKernelSpec::hess_x(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const {
  const double s = check_order(z, zeta);
  const Vec d = z.x - zeta.x;
  const double g = value(z, zeta);
  const Vec w = a_inv_.apply(d);
  Mat out(dim());
  for (int i = 0; i < dim(); ++i)
    for (int j = 0; j < dim(); ++j) out(i, j) = g * (w[i] * w[j] / (4.0 * s * s) - a_inv_(i, j) / (2.0 * s));
  return out;
}

double GaussianKernelSpec::dt(const SpaceTimePoint& z, const SpaceTimePoint& zeta) const {
  const double s = check_order(z, zeta);
  const Vec d = z.x - zeta.x;
  const double q = quad_form(a_inv_, d);
  return value(z, zeta) * (-0.5 * dim() / s + q / (4.0 * s * s));
}

double GaussianKernelSpec::envelope_c_plus() const {
  return std::pow(eig_max_, 0.5 * dim()) / std::sqrt(det_a_);
}

double gamma_const(const GaussianKernelSpec& spec, const SpaceTimePoint& z, const SpaceTimePoint& zeta) {
  return spec.value(z, zeta);
}

double log_gamma_plus(double lambda_plus, const SpaceTimePoint& z, const SpaceTimePoint& zeta) {
  const double s = z.t - zeta.t;
  if (!(s > 0.0)) throw std::domain_error("gamma_plus: requires t > tau");
  if (!(lambda_plus > 0.0)) throw std::invalid_argument("gamma_plus: LambdaPlus must be positive");
  const double d2 = (z.x - zeta.x).norm2();
  return -0.5 * z.dim() * std::log(4.0 * kPi * lambda_plus * s) - d2 / (4.0 * lambda_plus * s);
}

double gamma_plus(double lambda_plus, const SpaceTimePoint& z, const SpaceTimePoint& zeta) {
  return std::exp(log_gamma_plus(lambda_plus, z, zeta));
}

double parametrix(const ParabolicOperator& op, const SpaceTimePoint& z, const SpaceTimePoint& zeta) {
  if (!(z.t > zeta.t)) throw std::domain_error("parametrix: requires t > tau");
  GaussianKernelSpec frozen(op.a(zeta));
  return frozen.value(z, zeta);
}

double parametrix_adjoint(const ParabolicOperator& op, const SpaceTimePoint& z, const SpaceTimePoint& zeta) {
  if (!(zeta.t > z.t)) throw std::domain_error("parametrix_adjoint: requires tau > t");
  GaussianKernelSpec frozen(op.a(zeta));
  // Same Gaussian with time gap tau - t.
  SpaceTimePoint zr{z.x, zeta.t + (zeta.t - z.t)};
  return frozen.value(zr, zeta);
}

ReproductionResult check_reproduction(const GaussianKernelSpec& spec, const SpaceTimePoint& z,
                                      const SpaceTimePoint& zeta, double s, int nodes_per_axis) {
  if (!(zeta.t < s && s < z.t)) throw std::domain_error("check_reproduction: requires tau < s < t");
  const int n = spec.dim();
  const double t_gap = z.t - s, tau_gap = s - zeta.t, total = z.t - zeta.t;
  const double lam = spec.max_eigenvalue();
  // Product of the two Gaussians concentrates at the time-interpolated point
  // with variance proxy 2*lam*(t-s)(s-tau)/(t-tau); truncate at 8 widths.
  Vec center(n);
  for (int i = 0; i < n; ++i) center[i] = (z.x[i] * tau_gap + zeta.x[i] * t_gap) / total;
  const double width = std::sqrt(2.0 * lam * t_gap * tau_gap / total);
  const double half = 8.0 * 1.25 * width;
  ReproductionResult res;
  res.domain_warning = (half < 6.0 * width);
  res.tail_bound = 1e-14;  // erfc-type mass beyond 8 widths, both factors positive

  const int nn = nodes_per_axis;
  const double h = 2.0 * half / nn;
  double acc = 0.0;
  const auto eval = [&](const Vec& xv) {
    SpaceTimePoint yy{xv, s};
    return spec.value(z, yy) * spec.value(yy, zeta);
  };
  if (n == 1) {
    for (int i = 0; i <= nn; ++i) {
      Vec xv{center[0] - half + i * h};
      const double w = (i == 0 || i == nn) ? 0.5 : 1.0;
      acc += w * eval(xv);
    }
    acc *= h;
  } else if (n == 2) {
    for (int i = 0; i <= nn; ++i) {
      const double wi = (i == 0 || i == nn) ? 0.5 : 1.0;
      for (int j = 0; j <= nn; ++j) {
        const double wj = (j == 0 || j == nn) ? 0.5 : 1.0;
        Vec xv{center[0] - half + i * h, center[1] - half + j * h};
        acc += wi * wj * eval(xv);
      }
    }
    acc *= h * h;
  } else {
    for (int i = 0; i <= nn; ++i) {
      const double wi = (i == 0 || i == nn) ? 0.5 : 1.0;
      for (int j = 0; j <= nn; ++j) {
        const double wj = (j == 0 || j == nn) ? 0.5 : 1.0;
        for (int k = 0; k <= nn; ++k) {
          const double wk = (k == 0 || k == nn) ? 0.5 : 1.0;
          Vec xv{center[0] - half + i * h, center[1] - half + j * h, center[2] - half + k * h};
          acc += wi * wj * wk * eval(xv);
        }
      }
    }
    acc *= h * h * h;
  }
  res.integral = acc;
  res.reference = spec.value(z, zeta);
  res.residual = std::abs(acc - res.reference);
  return res;
}

DerivativeBoundReport check_gaussian_derivative_bounds(
    const GaussianKernelSpec& spec, double lambda_plus, double declared_c_plus,
    const std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>>& samples) {
  if (!(lambda_plus > spec.max_eigenvalue())) throw std::invalid_argument("derivative bounds: LambdaPlus must exceed Lambda");
  DerivativeBoundReport rep;
  for (const auto& [z, zeta] : samples) {
    const double s = z.t - zeta.t;
    const double gp = gamma_plus(lambda_plus, z, zeta);
    const Vec g = spec.grad_x(z, zeta);
    const Mat h = spec.hess_x(z, zeta);
    for (int j = 0; j < spec.dim(); ++j)
      rep.empirical_c_first = std::max(rep.empirical_c_first, std::abs(g[j]) * std::sqrt(s) / gp);
    for (int i = 0; i < spec.dim(); ++i)
      for (int j = 0; j < spec.dim(); ++j)
        rep.empirical_c_second = std::max(rep.empirical_c_second, std::abs(h(i, j)) * s / gp);
  }
  rep.empirical_c = std::max(rep.empirical_c_first, rep.empirical_c_second);
  rep.declared_ok = declared_c_plus >= rep.empirical_c;
  return rep;
}

}  // namespace pmvf
