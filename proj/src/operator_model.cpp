#include "pmvf/operator_model.hpp"

#include <cmath>
#include <stdexcept>

namespace pmvf {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string("evaluation error: non-finite ") + what);
}

double space_step(const SolutionField& u, const SpaceTimePoint& z) { return u.fd_step * (1.0 + z.x.norm()); }
double time_step(const SolutionField& u, const SpaceTimePoint& z) { return u.fd_step * (1.0 + std::abs(z.t)); }

}  // namespace

bool ParabolicOperator::has_drift() const { return static_cast<bool>(b); }
bool ParabolicOperator::has_zero_order() const { return static_cast<bool>(c); }

Vec SolutionField::gradient(const SpaceTimePoint& z) const {
  if (grad) return grad(z);
  const double h = space_step(*this, z);
  Vec g(z.dim());
  SpaceTimePoint zp = z, zm = z;
  for (int i = 0; i < z.dim(); ++i) {
    zp.x[i] = z.x[i] + h;
    zm.x[i] = z.x[i] - h;
    g[i] = (value(zp) - value(zm)) / (2.0 * h);
    zp.x[i] = z.x[i];
    zm.x[i] = z.x[i];
  }
  return g;
}

Mat SolutionField::hessian(const SpaceTimePoint& z) const {
  if (hess) return hess(z);
  const double h = space_step(*this, z);
  const int n = z.dim();
  Mat H(n);
  const double u0 = value(z);
  SpaceTimePoint w = z;
  for (int i = 0; i < n; ++i) {
    w.x[i] = z.x[i] + h;
    const double up = value(w);
    w.x[i] = z.x[i] - h;
    const double um = value(w);
    w.x[i] = z.x[i];
    H(i, i) = (up - 2.0 * u0 + um) / (h * h);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      w = z;
      w.x[i] += h;
      w.x[j] += h;
      const double upp = value(w);
      w.x[j] -= 2.0 * h;
      const double upm = value(w);
      w.x[i] -= 2.0 * h;
      const double umm = value(w);
      w.x[j] += 2.0 * h;
      const double ump = value(w);
      H(i, j) = H(j, i) = (upp - upm - ump + umm) / (4.0 * h * h);
    }
  }
  return H;
}

double SolutionField::time_derivative(const SpaceTimePoint& z) const {
  if (dt) return dt(z);
  const double h = time_step(*this, z);
  SpaceTimePoint zp = z, zm = z;
  zp.t += h;
  zm.t -= h;
  return (value(zp) - value(zm)) / (2.0 * h);
}

double apply_operator(const ParabolicOperator& op, const SolutionField& u, const SpaceTimePoint& z) {
  if (z.dim() != op.dim) throw std::invalid_argument("apply_operator: dimension mismatch");
  if (!z.all_finite()) throw std::runtime_error("domain error: non-finite point");
  const Mat A = op.a(z);
  const Vec da = op.da ? op.da(z) : Vec(op.dim);
  const Vec g = u.gradient(z);
  const Mat H = u.hessian(z);
  double out = 0.0;
  for (int j = 0; j < op.dim; ++j) out += da[j] * g[j];
  for (int i = 0; i < op.dim; ++i)
    for (int j = 0; j < op.dim; ++j) out += A(i, j) * H(i, j);
  if (op.b) out += dot(op.b(z), g);
  if (op.c) out += op.c(z) * u.value(z);
  out -= u.time_derivative(z);
  require_finite(out, "operator value");
  return out;
}

double apply_adjoint(const ParabolicOperator& op, const SolutionField& v, const SpaceTimePoint& z) {
  if (z.dim() != op.dim) throw std::invalid_argument("apply_adjoint: dimension mismatch");
  const Mat A = op.a(z);
  const Vec da = op.da ? op.da(z) : Vec(op.dim);
  const Vec g = v.gradient(z);
  const Mat H = v.hessian(z);
  double out = 0.0;
  for (int j = 0; j < op.dim; ++j) out += da[j] * g[j];
  for (int i = 0; i < op.dim; ++i)
    for (int j = 0; j < op.dim; ++j) out += A(i, j) * H(i, j);
  if (op.b) out -= dot(op.b(z), g);
  double zo = 0.0;
  if (op.c) zo += op.c(z);
  if (op.div_b) zo -= op.div_b(z);
  out += zo * v.value(z);
  out += v.time_derivative(z);
  require_finite(out, "adjoint value");
  return out;
}

HypothesisReport verify_hypotheses(const ParabolicOperator& op, const std::vector<SpaceTimePoint>& samples,
                                   const std::vector<Vec>& directions) {
  if (samples.empty()) throw std::invalid_argument("verify_hypotheses: empty sample set");
  HypothesisReport rep;

  for (const auto& z : samples) {
    const Mat A = op.a(z);
    rep.worst_asymmetry = std::max(rep.worst_asymmetry, A.max_asymmetry());
    for (const auto& xi : directions) {
      const double n2 = xi.norm2();
      if (n2 == 0.0) continue;
      const double q = quad_form(A, xi);
      rep.worst_lower_violation = std::max(rep.worst_lower_violation, op.lambda * n2 - q);
      rep.worst_upper_violation = std::max(rep.worst_upper_violation, q - op.Lambda * n2);
    }
    if (op.da) {
      const Vec da = op.da(z);
      for (int j = 0; j < op.dim; ++j)
        rep.worst_coeff_bound_violation = std::max(rep.worst_coeff_bound_violation, std::abs(da[j]) - op.Lambda);
    }
    if (op.b) {
      const Vec bv = op.b(z);
      for (int j = 0; j < op.dim; ++j)
        rep.worst_coeff_bound_violation = std::max(rep.worst_coeff_bound_violation, std::abs(bv[j]) - op.Lambda);
    }
    if (op.c) rep.worst_coeff_bound_violation = std::max(rep.worst_coeff_bound_violation, std::abs(op.c(z)) - op.Lambda);
  }

  // Empirical Hoelder quotients over all sample pairs, against declared alpha.
  const auto pdist = [&](const SpaceTimePoint& z, const SpaceTimePoint& w) {
    return std::pow((z.x - w.x).norm(), op.holder_alpha) + std::pow(std::abs(z.t - w.t), 0.5 * op.holder_alpha);
  };
  struct Probe {
    std::string name;
    std::function<double(const SpaceTimePoint&, const SpaceTimePoint&)> diff;
    bool present;
  };
  std::vector<Probe> probes;
  probes.push_back({"a",
                    [&](const SpaceTimePoint& z, const SpaceTimePoint& w) {
                      const Mat az = op.a(z), aw = op.a(w);
                      double d = 0;
                      for (int i = 0; i < op.dim; ++i)
                        for (int j = 0; j < op.dim; ++j) d = std::max(d, std::abs(az(i, j) - aw(i, j)));
                      return d;
                    },
                    true});
  probes.push_back({"da",
                    [&](const SpaceTimePoint& z, const SpaceTimePoint& w) {
                      const Vec dz = op.da(z), dw = op.da(w);
                      double d = 0;
                      for (int j = 0; j < op.dim; ++j) d = std::max(d, std::abs(dz[j] - dw[j]));
                      return d;
                    },
                    static_cast<bool>(op.da)});
  probes.push_back({"b",
                    [&](const SpaceTimePoint& z, const SpaceTimePoint& w) {
                      const Vec bz = op.b(z), bw = op.b(w);
                      double d = 0;
                      for (int j = 0; j < op.dim; ++j) d = std::max(d, std::abs(bz[j] - bw[j]));
                      return d;
                    },
                    static_cast<bool>(op.b)});
  probes.push_back({"div_b",
                    [&](const SpaceTimePoint& z, const SpaceTimePoint& w) { return std::abs(op.div_b(z) - op.div_b(w)); },
                    static_cast<bool>(op.div_b)});
  probes.push_back({"c", [&](const SpaceTimePoint& z, const SpaceTimePoint& w) { return std::abs(op.c(z) - op.c(w)); },
                    static_cast<bool>(op.c)});

  for (const auto& probe : probes) {
    if (!probe.present) continue;
    HolderQuotient hq;
    hq.field = probe.name;
    for (size_t i = 0; i < samples.size(); ++i) {
      for (size_t j = i + 1; j < samples.size(); ++j) {
        const double d = pdist(samples[i], samples[j]);
        if (d <= 0.0) continue;
        hq.worst = std::max(hq.worst, probe.diff(samples[i], samples[j]) / d);
      }
    }
    hq.within_M = hq.worst <= op.holder_M * (1.0 + 1e-12) + 1e-15;
    if (!hq.within_M) rep.holder_ok = false;
    rep.holder.push_back(hq);
  }

  rep.spectral_ok = rep.worst_lower_violation <= 0.0 && rep.worst_upper_violation <= 0.0;
  rep.coeff_bounds_ok = rep.worst_coeff_bound_violation <= 0.0;
  return rep;
}

}  // namespace pmvf
