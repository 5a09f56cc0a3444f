#include "pmvf/parametrix_series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmvf {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 1-d constant-coefficient Gaussian and its x-derivatives, scalar a.
inline double gauss1(double d, double a, double s) {
  return std::exp(-d * d / (4.0 * a * s)) / std::sqrt(4.0 * kPi * a * s);
}
inline double gauss1_dx(double d, double a, double s) { return -d / (2.0 * a * s) * gauss1(d, a, s); }
inline double gauss1_dxx(double d, double a, double s) {
  return (d * d / (4.0 * a * a * s * s) - 1.0 / (2.0 * a * s)) * gauss1(d, a, s);
}

// Cubic smoothstep map for the Volterra time integrals: density 6 xi (1-xi)
// vanishes linearly at both endpoints, absorbing the (s-tau)^{alpha/2-1}
// singularity and the sqrt boundary layer at s = t.
inline double smoothstep(double xi) { return xi * xi * (3.0 - 2.0 * xi); }
inline double smoothstep_deriv(double xi) { return 6.0 * xi * (1.0 - xi); }

void require_series_operator(const ParabolicOperator& op) {
  if (op.has_drift() || op.has_zero_order())
    throw std::invalid_argument("parametrix series: operator must have b = 0 and c = 0");
}

}  // namespace

double lz(const ParabolicOperator& op, const SpaceTimePoint& z, const SpaceTimePoint& zeta) {
  require_series_operator(op);
  if (!(z.t > zeta.t)) throw std::domain_error("lz: requires t > tau");
  const GaussianKernelSpec frozen(op.a(zeta));
  const Mat diff = op.a(z) - op.a(zeta);
  const Vec da = op.da ? op.da(z) : Vec(op.dim);
  const Vec g = frozen.grad_x(z, zeta);
  const Mat h = frozen.hess_x(z, zeta);
  double out = 0.0;
  for (int j = 0; j < op.dim; ++j) out += da[j] * g[j];
  for (int i = 0; i < op.dim; ++i)
    for (int j = 0; j < op.dim; ++j) out += diff(i, j) * h(i, j);
  return out;
}

namespace {

// Direct nested quadrature of (LZ)_k = LZ o (LZ)_{k-1}, dimension 1.
double lz_iterate_impl(const ParabolicOperator& op, int k, const SpaceTimePoint& z, const SpaceTimePoint& zeta,
                       double lambda_plus, int nt, int ny, double u_max) {
  if (k == 1) return lz(op, z, zeta);
  const double t = z.t, tau = zeta.t;
  double acc = 0.0;
  for (int j = 0; j < nt; ++j) {
    const double xi = (j + 0.5) / nt;
    const double s = tau + (t - tau) * smoothstep(xi);
    const double wt = (t - tau) * smoothstep_deriv(xi) / nt;
    // Product-envelope-mapped nodes in y.
    const double c = (z.x[0] * (s - tau) + zeta.x[0] * (t - s)) / (t - tau);
    const double w = 1.3 * std::sqrt(2.0 * lambda_plus * (t - s) * (s - tau) / (t - tau)) + 1e-300;
    double inner = 0.0;
    for (int i = 0; i < ny; ++i) {
      const double u = -u_max + (i + 0.5) * 2.0 * u_max / ny;
      const double y = c + w * u;
      const SpaceTimePoint mid{Vec{y}, s};
      inner += lz(op, z, mid) * lz_iterate_impl(op, k - 1, mid, zeta, lambda_plus, nt, ny, u_max);
    }
    acc += wt * inner * (w * 2.0 * u_max / ny);
  }
  return acc;
}

}  // namespace

double lz_iterate(const ParabolicOperator& op, int k, const SpaceTimePoint& z, const SpaceTimePoint& zeta,
                  const SeriesConfig& cfg) {
  require_series_operator(op);
  if (k < 1) throw std::invalid_argument("lz_iterate: k must be >= 1");
  if (k > 1 && op.dim != 1) throw std::invalid_argument("lz_iterate: nested quadrature implemented for dimension 1");
  const double lp = cfg.lambda_plus > 0.0 ? cfg.lambda_plus : 1.1 * op.Lambda;
  return lz_iterate_impl(op, k, z, zeta, lp, cfg.time_nodes, cfg.space_nodes, cfg.space_width_sigmas);
}

LzIterateDiag lz_iterate_checked(const ParabolicOperator& op, int k, const SpaceTimePoint& z,
                                 const SpaceTimePoint& zeta, const SeriesConfig& cfg, double tolerance) {
  LzIterateDiag diag;
  diag.value = lz_iterate(op, k, z, zeta, cfg);
  SeriesConfig fine = cfg;
  fine.time_nodes = cfg.time_nodes + cfg.time_nodes / 2;
  fine.space_nodes = cfg.space_nodes + cfg.space_nodes / 2;
  diag.refined = lz_iterate(op, k, z, zeta, fine);
  diag.disagreement = std::abs(diag.value - diag.refined);
  diag.under_resolved = diag.disagreement > tolerance;
  return diag;
}

std::pair<double, double> gamma_series(const ParabolicOperator& op, const SpaceTimePoint& z0,
                                       const SpaceTimePoint& z, const SeriesConfig& cfg) {
  SeriesGammaField field(op, z0, cfg);
  const double gap = z0.t - z.t;
  return {field.value(z), field.series_tail_bound(gap)};
}

double tail_bound(int k0, double dt, double alpha, double c_tilde, double norm_const) {
  if (!(dt > 0.0)) throw std::invalid_argument("tail_bound: dt must be positive");
  if (c_tilde == 0.0) return 0.0;
  const double base = std::exp(std::lgamma(0.5 * alpha)) * c_tilde;
  double acc = 0.0;
  for (int k = k0; k < k0 + 600; ++k) {
    const double log_term = k * std::log(base) - std::lgamma(0.5 * alpha * k) + (0.5 * alpha * k - 1.0) * std::log(dt);
    const double term = std::exp(log_term);
    acc += term;
    if (term < 1e-18 * std::max(acc, 1e-300)) break;
  }
  return acc * norm_const;
}

// ---------------------------------------------------------------------------
// SeriesGammaField
// ---------------------------------------------------------------------------

struct SeriesGammaField::Impl {
  ParabolicOperator op;  // time-reflected transposed operator (== op for b=c=0, A(x))
  SeriesConfig cfg;
  SpaceTimePoint pole_rev;  // (x0, -t0): forward-series pole
  double a_pole = 1.0;      // frozen coefficient at the pole
  double lambda_plus = 1.1;
  double c_tilde = 0.0;
  double alpha = 1.0;

  // Memo lattice for the normalized iterated kernels, k >= 2:
  //   S_k(u, sigma) = (sigma-tau)^{1-k alpha/2} W_k / Gamma^+,
  //   W_k(y, sigma) = (LZ)_k(y, sigma; pole), u = (y-xi)/sqrt(sigma-tau).
  // Rows are indexed by varsigma = sqrt(sigma - tau), uniformly spaced.
  int n_sig = 0, n_u = 0;
  double u_max = 8.0, sig_max = 1.0;
  std::vector<std::vector<double>> lattice;  // [k-2][q * n_u + i]

  double coeff_a(double y, double s) const { return op.a(SpaceTimePoint{Vec{y}, s})(0, 0); }
  double coeff_da(double y, double s) const { return op.da ? op.da(SpaceTimePoint{Vec{y}, s})[0] : 0.0; }

  // Analytic LZ(x,t; y,s) for the 1-d operator.
  double lz_fast(double x, double t, double y, double s) const {
    const double af = coeff_a(y, s);
    const double d = x - y, gap = t - s;
    return coeff_da(x, t) * gauss1_dx(d, af, gap) + (coeff_a(x, t) - af) * gauss1_dxx(d, af, gap);
  }

  double gamma_plus_1d(double d, double gap) const {
    return std::exp(-d * d / (4.0 * lambda_plus * gap)) / std::sqrt(4.0 * kPi * lambda_plus * gap);
  }

  // Catmull-Rom through four samples; C^1 across cells, so the quadrature of
  // interpolated kernels stays finite-difference friendly.
  static double catmull(double p0, double p1, double p2, double p3, double t) {
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
  }

  double lattice_at(const std::vector<double>& tab, int iq, int iu) const {
    iq = std::clamp(iq, 0, n_sig - 1);
    iu = std::clamp(iu, 0, n_u - 1);
    return tab[static_cast<std::size_t>(iq) * n_u + iu];
  }

  // W_k at an arbitrary point: analytic for k = 1, lattice lookup for k >= 2.
  double w_k(int k, double y, double s) const {
    const double gap = s - pole_rev.t;
    if (gap <= 0.0) return 0.0;
    if (k == 1) return lz_fast(y, s, pole_rev.x[0], pole_rev.t);
    const double u = (y - pole_rev.x[0]) / std::sqrt(gap);
    if (std::abs(u) >= u_max) return 0.0;
    const double sig = std::sqrt(gap);
    const auto& tab = lattice[k - 2];
    // Bicubic in (u, varsigma); varsigma row 0 sits at sig_max/n_sig.
    const double fu = (u + u_max) / (2.0 * u_max) * (n_u - 1);
    const double fq = sig / (sig_max / n_sig) - 1.0;
    const int iu = std::clamp(static_cast<int>(std::floor(fu)), 0, n_u - 2);
    const int iq = std::clamp(static_cast<int>(std::floor(fq)), 0, n_sig - 2);
    const double du = std::clamp(fu - iu, 0.0, 1.0);
    const double dq = std::clamp(fq - iq, 0.0, 1.0);
    double rows[4];
    for (int r = 0; r < 4; ++r)
      rows[r] = catmull(lattice_at(tab, iq - 1 + r, iu - 1), lattice_at(tab, iq - 1 + r, iu),
                        lattice_at(tab, iq - 1 + r, iu + 1), lattice_at(tab, iq - 1 + r, iu + 2), du);
    const double sk = catmull(rows[0], rows[1], rows[2], rows[3], dq);
    return std::pow(gap, 0.5 * alpha * k - 1.0) * gamma_plus_1d(y - pole_rev.x[0], gap) * sk;
  }

  // Volterra integral int_tau^t int kernel(x,t;y,s) W_k(y,s) dy ds with the
  // smoothstep time map and product-envelope spatial nodes.
  template <typename Kernel>
  double volterra(const Kernel& kernel, int k, double x, double t) const {
    const double tau = pole_rev.t, xi = pole_rev.x[0];
    const int nt = cfg.time_nodes, ny = cfg.space_nodes;
    const double totals = t - tau;
    double acc = 0.0;
    for (int j = 0; j < nt; ++j) {
      const double q = (j + 0.5) / nt;
      const double s = tau + totals * smoothstep(q);
      const double wt = totals * smoothstep_deriv(q) / nt;
      if (!(s > tau && s < t)) continue;
      const double c = (x * (s - tau) + xi * (t - s)) / totals;
      const double w = 1.3 * std::sqrt(2.0 * lambda_plus * (t - s) * (s - tau) / totals) + 1e-300;
      const double hu = 2.0 * cfg.space_width_sigmas / ny;
      double inner = 0.0;
      for (int i = 0; i < ny; ++i) {
        const double u = -cfg.space_width_sigmas + (i + 0.5) * hu;
        const double y = c + w * u;
        inner += kernel(x, t, y, s) * w_k(k, y, s);
      }
      acc += wt * inner * w * hu;
    }
    return acc;
  }

  double z_kernel(double x, double t, double y, double s) const { return gauss1(x - y, coeff_a(y, s), t - s); }
  double z_kernel_dx(double x, double t, double y, double s) const {
    return gauss1_dx(x - y, coeff_a(y, s), t - s);
  }

  void fit_c_tilde() {
    // c_tilde = sup |LZ(z; pole)| (t-tau)^{1-alpha/2} / Gamma^+ over a grid;
    // the ratio peaks several envelope widths out, so scan u to +-12.
    double best = 0.0;
    const double xi = pole_rev.x[0], tau = pole_rev.t;
    for (int q = 1; q <= 40; ++q) {
      const double gap = cfg.horizon * std::pow(q / 40.0, 2.0);
      for (int i = 0; i <= 240; ++i) {
        const double u = -12.0 + 24.0 * i / 240.0;
        const double y = xi + u * std::sqrt(gap);
        const double v = std::abs(lz_fast(y, tau + gap, xi, tau));
        const double env = gamma_plus_1d(y - xi, gap);
        if (env > 0.0) best = std::max(best, v * std::pow(gap, 1.0 - 0.5 * alpha) / env);
      }
    }
    c_tilde = best;
  }

  void build_lattice() {
    n_sig = cfg.lattice_time_nodes;
    n_u = cfg.lattice_space_nodes;
    u_max = cfg.lattice_u_max;
    sig_max = std::sqrt(cfg.horizon);
    lattice.assign(std::max(0, cfg.k_max - 1), std::vector<double>(n_sig * n_u, 0.0));
    const double xi = pole_rev.x[0], tau = pole_rev.t;
    for (int k = 2; k <= cfg.k_max; ++k) {
      auto& tab = lattice[k - 2];
      for (int q = 0; q < n_sig; ++q) {
        const double sig = (q + 1) * sig_max / n_sig;
        const double gap = sig * sig;
        const double s = tau + gap;
        for (int i = 0; i < n_u; ++i) {
          const double u = -u_max + 2.0 * u_max * i / (n_u - 1);
          const double y = xi + u * sig;
          const double wk = volterra([this](double px, double pt, double py, double ps) { return lz_fast(px, pt, py, ps); },
                                     k - 1, y, s);
          const double env = gamma_plus_1d(y - xi, gap);
          tab[q * n_u + i] = env > 0.0 ? wk * std::pow(gap, 1.0 - 0.5 * alpha * k) / env : 0.0;
        }
      }
    }
  }

  SpaceTimePoint reflected(const SpaceTimePoint& z) const { return SpaceTimePoint{z.x, -z.t}; }
};

SeriesGammaField::SeriesGammaField(const ParabolicOperator& op, SpaceTimePoint pole, SeriesConfig cfg)
    : GammaField(pole), impl_(std::make_unique<Impl>()) {
  require_series_operator(op);
  if (op.dim != 1) throw std::invalid_argument("SeriesGammaField: dimension 1 only");
  if (cfg.k_max < 0) throw std::invalid_argument("SeriesGammaField: k_max must be >= 0");
  impl_->cfg = cfg;
  impl_->alpha = op.holder_alpha;
  impl_->lambda_plus = cfg.lambda_plus > 0.0 ? cfg.lambda_plus : 1.1 * op.Lambda;
  if (!(impl_->lambda_plus > op.Lambda)) throw std::invalid_argument("SeriesGammaField: LambdaPlus must exceed Lambda");
  impl_->cfg.lambda_plus = impl_->lambda_plus;

  // Time-reflected transposed operator. With b = c = 0 only A survives:
  // A~(x, s) = A(x, -s).
  const MatFn a_orig = op.a;
  const VecFn da_orig = op.da;
  impl_->op = op;
  impl_->op.a = [a_orig](const SpaceTimePoint& z) { return a_orig(SpaceTimePoint{z.x, -z.t}); };
  impl_->op.da = da_orig ? VecFn([da_orig](const SpaceTimePoint& z) { return da_orig(SpaceTimePoint{z.x, -z.t}); })
                         : VecFn();
  impl_->pole_rev = SpaceTimePoint{pole.x, -pole.t};
  impl_->a_pole = impl_->coeff_a(impl_->pole_rev.x[0], impl_->pole_rev.t);

  if (cfg.c_tilde > 0.0)
    impl_->c_tilde = cfg.c_tilde;
  else
    impl_->fit_c_tilde();
  impl_->build_lattice();
}

SeriesGammaField::~SeriesGammaField() = default;

double SeriesGammaField::parametrix_value(const SpaceTimePoint& z) const {
  const double gap = gap_checked(z);
  return gauss1(z.x[0] - pole().x[0], impl_->a_pole, gap);
}

double SeriesGammaField::value_truncated(const SpaceTimePoint& z, int K) const {
  const double gap = gap_checked(z);
  if (gap > impl_->cfg.horizon * (1.0 + 1e-12))
    throw std::domain_error("SeriesGammaField: t0 - t exceeds the configured horizon");
  if (K < 0 || K > impl_->cfg.k_max) throw std::invalid_argument("SeriesGammaField: bad truncation order");
  const double x = z.x[0], t = -z.t;  // forward coordinates
  double acc = gauss1(x - impl_->pole_rev.x[0], impl_->a_pole, t - impl_->pole_rev.t);
  for (int k = 1; k <= K; ++k)
    acc += impl_->volterra([this](double px, double pt, double py, double ps) { return impl_->z_kernel(px, pt, py, ps); },
                           k, x, t);
  return acc;
}

double SeriesGammaField::value(const SpaceTimePoint& z) const { return value_truncated(z, impl_->cfg.k_max); }

Vec SeriesGammaField::grad_x(const SpaceTimePoint& z) const {
  const double gap = gap_checked(z);
  const double x = z.x[0], t = -z.t;
  double g = gauss1_dx(x - impl_->pole_rev.x[0], impl_->a_pole, gap);
  for (int k = 1; k <= impl_->cfg.k_max; ++k)
    g += impl_->volterra(
        [this](double px, double pt, double py, double ps) { return impl_->z_kernel_dx(px, pt, py, ps); }, k, x, t);
  return Vec{g};
}

double SeriesGammaField::series_tail_bound(double gap) const {
  if (!(gap > 0.0)) return 0.0;
  // |Gamma - Gamma_K| <= C_z sum_{k>K} (GE(a/2) c~)^k / GE(a k/2) gap^{k a/2} / (k a/2) * sup Gamma^+.
  const double cz = std::sqrt(impl_->lambda_plus / impl_->op.lambda);
  const double sup_gp = 1.0 / std::sqrt(4.0 * kPi * impl_->lambda_plus * gap);
  const double base = std::exp(std::lgamma(0.5 * impl_->alpha)) * impl_->c_tilde;
  double acc = 0.0;
  for (int k = impl_->cfg.k_max + 1; k <= impl_->cfg.k_max + 400; ++k) {
    const double e = 0.5 * impl_->alpha * k;
    const double term = std::exp(k * std::log(base) - std::lgamma(e) + e * std::log(gap)) / e;
    acc += term;
    if (term < 1e-18 * std::max(acc, 1e-300)) break;
  }
  return acc * cz * sup_gp;
}

double SeriesGammaField::envelope_lambda_plus() const { return impl_->lambda_plus; }

double SeriesGammaField::envelope_c_plus() const {
  // Z <= (Lambda+/lambda)^{1/2} Gamma^+ and Gamma within (1 +- eta) Z near the
  // diagonal; a factor 2 covers the shipped perturbation sizes.
  return 2.0 * std::sqrt(impl_->lambda_plus / impl_->op.lambda);
}

double SeriesGammaField::fitted_c_tilde() const { return impl_->c_tilde; }
const SeriesConfig& SeriesGammaField::config() const { return impl_->cfg; }

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

PdeResidualReport check_pde_residual(const SeriesGammaField& field, const ParabolicOperator& op,
                                     const std::vector<SpaceTimePoint>& samples) {
  PdeResidualReport rep;
  const int kmax = field.config().k_max;
  for (int K = 0; K <= kmax; ++K) {
    SolutionField u;
    u.value = [&field, K](const SpaceTimePoint& z) { return field.value_truncated(z, K); };
    double worst = 0.0;
    for (const auto& z : samples) worst = std::max(worst, std::abs(apply_adjoint(op, u, z)));
    rep.max_residual_by_k.push_back(worst);
  }
  for (size_t i = 1; i < rep.max_residual_by_k.size(); ++i)
    if (rep.max_residual_by_k[i] > rep.max_residual_by_k[i - 1]) rep.monotone_decreasing = false;
  return rep;
}

GlobalBoundsReport check_global_bounds(const GammaField& field, const ParabolicOperator& op,
                                       const std::vector<SpaceTimePoint>& samples, const std::vector<double>& gaps,
                                       int mass_nodes) {
  GlobalBoundsReport rep;
  const double lp = field.envelope_lambda_plus();
  const SpaceTimePoint z0 = field.pole();
  for (const auto& z : samples) {
    const double gp = gamma_plus(lp, z0, z);
    if (gp > 0.0) rep.fitted_c_plus = std::max(rep.fitted_c_plus, field.value(z) / gp);
  }
  for (double gap : gaps) {
    GlobalBoundsReport::MassRow row;
    row.gap = gap;
    row.lower = std::exp(-op.Lambda * gap);
    row.upper = std::exp(op.Lambda * gap);
    // int Gamma(z0; (x, t0-gap)) dx by trapezoid over the envelope box.
    const double half = 8.0 * std::sqrt(2.0 * lp * gap) * 1.3 + 1.0;
    const double h = 2.0 * half / mass_nodes;
    double acc = 0.0;
    for (int i = 0; i <= mass_nodes; ++i) {
      SpaceTimePoint z{Vec{z0.x[0] - half + i * h}, z0.t - gap};
      const double w = (i == 0 || i == mass_nodes) ? 0.5 : 1.0;
      acc += w * field.value(z);
    }
    row.mass = acc * h;
    row.within = row.mass >= row.lower - 1e-9 && row.mass <= row.upper + 1e-9;
    if (!row.within) rep.mass_ok = false;
    rep.mass.push_back(row);
  }
  return rep;
}

DiagonalRatioReport check_diagonal_ratio(const GammaField& field, const ParabolicOperator& op, double eta,
                                         const std::vector<SpaceTimePoint>& samples) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("check_diagonal_ratio: eta must be in (0,1)");
  DiagonalRatioReport rep;
  rep.eta = eta;
  struct Pair {
    double z_val, ratio;
  };
  std::vector<Pair> pairs;
  pairs.reserve(samples.size());
  for (const auto& z : samples) {
    const double zv = parametrix_adjoint(op, z, field.pole());
    pairs.push_back({zv, field.value(z) / zv});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.z_val > b.z_val; });
  // Largest prefix (by descending Z) on which the ratio stays inside the band.
  size_t good = 0;
  for (; good < pairs.size(); ++good) {
    if (pairs[good].ratio < 1.0 - eta || pairs[good].ratio > 1.0 + eta) break;
  }
  if (good == 0) {
    rep.found = false;
    rep.c_eta = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.found = true;
  rep.samples_above = good;
  rep.c_eta = good < pairs.size() ? pairs[good].z_val : 0.0;
  for (size_t i = 0; i < good; ++i) {
    rep.worst_ratio_low = std::min(rep.worst_ratio_low, pairs[i].ratio);
    rep.worst_ratio_high = std::max(rep.worst_ratio_high, pairs[i].ratio);
  }
  return rep;
}

}  // namespace pmvf
