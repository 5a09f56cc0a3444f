#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pmvf/parametrix_series.hpp"
#include "test_support.hpp"

using namespace pmvf;
using testkit::heat_operator;
using testkit::kPi;
using testkit::trig_operator;

namespace {

SeriesConfig quick_config() {
  SeriesConfig cfg;
  cfg.k_max = 3;
  cfg.time_nodes = 24;
  cfg.space_nodes = 48;
  cfg.horizon = 1.0;
  cfg.lattice_time_nodes = 36;
  cfg.lattice_space_nodes = 144;
  return cfg;
}

// Monte Carlo oracle for (LZ)_2(z; zeta): stratified in time through a
// smoothstep map (bounded transformed integrand), uniform over a wide strip
// in space.
std::pair<double, double> lz2_montecarlo(const ParabolicOperator& op, const SpaceTimePoint& z,
                                         const SpaceTimePoint& zeta, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double t = z.t, tau = zeta.t;
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double xi = uni(rng);
    const double s = tau + (t - tau) * xi * xi * (3.0 - 2.0 * xi);
    const double wt = (t - tau) * 6.0 * xi * (1.0 - xi);
    const double c = (z.x[0] * (s - tau) + zeta.x[0] * (t - s)) / (t - tau);
    const double w = 2.0 * std::sqrt(2.0 * 1.2 * (t - s) * (s - tau) / (t - tau)) + 1e-12;
    const double half = 8.0 * w;
    const double y = c - half + 2.0 * half * uni(rng);
    const SpaceTimePoint mid{Vec{y}, s};
    double v = 0.0;
    if (s > tau && s < t) v = wt * 2.0 * half * lz(op, z, mid) * lz(op, mid, zeta);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST_CASE("LZ vanishes identically for constant coefficients") {
  const auto op = heat_operator(1);
  CHECK(lz(op, {Vec{0.3}, 0.8}, {Vec{0.0}, 0.0}) == doctest::Approx(0.0));
  const auto cfg = quick_config();
  CHECK(lz_iterate(op, 2, {Vec{0.3}, 0.8}, {Vec{0.0}, 0.0}, cfg) == doctest::Approx(0.0));
  CHECK(lz_iterate(op, 3, {Vec{0.3}, 0.8}, {Vec{0.0}, 0.0}, cfg) == doctest::Approx(0.0));
}

TEST_CASE("LZ tends to zero as x -> xi at fixed time gap") {
  const auto op = trig_operator(0.1);
  const SpaceTimePoint zeta{Vec{0.4}, 0.0};
  double prev = 1e300;
  for (int k = 1; k <= 6; ++k) {
    const double x = 0.4 + std::pow(2.0, -k);
    const double v = std::abs(lz(op, {Vec{x}, 0.3}, zeta));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("LZ envelope bound with the fitted constant") {
  const auto op = trig_operator(0.1);
  SeriesGammaField field(op, {Vec{0.0}, 0.0}, quick_config());
  const double c_tilde = field.fitted_c_tilde();
  CHECK(c_tilde > 0.0);
  CHECK(c_tilde < 5.0);
  // Denser independent grid: the fitted envelope holds up to scan slack.
  const double lp = field.config().lambda_plus;
  double worst = 0.0;
  for (int q = 1; q <= 73; ++q)
    for (int i = 0; i <= 217; ++i) {
      const double gap = 1.0 * std::pow(q / 73.0, 2.0);
      const double u = -11.8 + 23.6 * i / 217.0;
      const SpaceTimePoint z{Vec{0.0 + u * std::sqrt(gap)}, gap};
      const SpaceTimePoint zeta{Vec{0.0}, 0.0};
      const double env = gamma_plus(lp, z, zeta);
      if (env <= 0.0) continue;
      worst = std::max(worst, std::abs(lz(op, z, zeta)) * std::pow(gap, 0.5) / env);
    }
  CHECK(worst <= c_tilde * 1.02);
}

TEST_CASE("(LZ)_2 against a Monte Carlo oracle") {
  const auto op = trig_operator(0.1);
  const SpaceTimePoint z{Vec{0.3}, 0.5}, zeta{Vec{0.0}, 0.0};
  const auto cfg = quick_config();
  const double product_rule = lz_iterate(op, 2, z, zeta, cfg);
  const auto [mc, se] = lz2_montecarlo(op, z, zeta, 800000, 0x5eedULL);
  CHECK(std::abs(product_rule - mc) <= 3.0 * se + 1e-12);
}

TEST_CASE("iterated kernel obeys the factorial-decay majorant") {
  const auto op = trig_operator(0.1);
  SeriesGammaField field(op, {Vec{0.0}, 0.0}, quick_config());
  const double c_tilde = field.fitted_c_tilde();
  const double lp = field.config().lambda_plus;
  const auto cfg = quick_config();
  const SpaceTimePoint zeta{Vec{0.0}, 0.0};
  for (double gap : {0.2, 0.6}) {
    for (double u : {-1.0, 0.0, 1.5}) {
      const SpaceTimePoint z{Vec{u * std::sqrt(gap)}, gap};
      const double v2 = std::abs(lz_iterate(op, 2, z, zeta, cfg));
      // k = 2, alpha = 1: majorant (GammaE(1/2) c~)^2 / GammaE(1) * Gamma^+.
      const double bound = std::pow(std::exp(std::lgamma(0.5)) * c_tilde, 2.0) * gamma_plus(lp, z, zeta);
      CHECK(v2 <= bound * 1.05 + 1e-15);
    }
  }
}

TEST_CASE("under-resolution diagnostics") {
  const auto op = trig_operator(0.3);
  SeriesConfig coarse = quick_config();
  coarse.time_nodes = 6;
  coarse.space_nodes = 10;
  const auto diag = lz_iterate_checked(op, 2, {Vec{0.3}, 0.5}, {Vec{0.0}, 0.0}, coarse, 1e-14);
  CHECK(diag.under_resolved);  // that tolerance is unreachable at 6x10 nodes
}

TEST_CASE("tail bound") {
  SUBCASE("zero constant gives zero") { CHECK(tail_bound(1, 0.5, 1.0, 0.0) == 0.0); }
  SUBCASE("consecutive summand ratio decays") {
    double prev_ratio = 1e300;
    double prev_term = 0.0;
    for (int k = 3; k < 14; ++k) {
      const double term = tail_bound(k, 0.5, 1.0, 1.0) - tail_bound(k + 1, 0.5, 1.0, 1.0);
      if (prev_term > 0.0) {
        const double ratio = term / prev_term;
        CHECK(ratio < prev_ratio + 1e-12);
        prev_ratio = ratio;
      }
      prev_term = term;
    }
    CHECK(prev_ratio < 0.6);
    CHECK(tail_bound(40, 0.5, 1.0, 1.0) - tail_bound(41, 0.5, 1.0, 1.0) <
          0.35 * (tail_bound(39, 0.5, 1.0, 1.0) - tail_bound(40, 0.5, 1.0, 1.0)));
  }
  SUBCASE("matches 200-term direct summation") {
    const double direct = [] {
      double acc = 0.0;
      for (int k = 3; k < 203; ++k)
        acc += std::pow(std::exp(std::lgamma(0.5)) * 1.0, k) / std::exp(std::lgamma(0.5 * k)) *
               std::pow(0.1, 0.5 * k - 1.0);
      return acc;
    }();
    CHECK(tail_bound(3, 0.1, 1.0, 1.0) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("series on a constant-coefficient operator reproduces the Gaussian") {
  const auto op = heat_operator(1);
  const SpaceTimePoint pole{Vec{0.2}, 0.5};
  SeriesGammaField series(op, pole, quick_config());
  ConstantGammaField exact(Mat::identity(1), pole);
  for (double x : {-0.4, 0.2, 0.9})
    for (double gap : {0.05, 0.3, 0.9}) {
      const SpaceTimePoint z{Vec{x}, 0.5 - gap};
      CHECK(series.value(z) == doctest::Approx(exact.value(z)).epsilon(1e-12));
    }
  CHECK(series.series_tail_bound(0.5) == 0.0);  // fitted c_tilde is 0
}

TEST_CASE("truncation order zero is exactly the parametrix") {
  const auto op = trig_operator(0.1);
  SeriesGammaField field(op, {Vec{0.0}, 0.0}, quick_config());
  for (double x : {-0.5, 0.1, 0.8})
    for (double gap : {0.1, 0.6}) {
      const SpaceTimePoint z{Vec{x}, -gap};
      CHECK(field.value_truncated(z, 0) == doctest::Approx(field.parametrix_value(z)).epsilon(1e-14));
    }
}

TEST_CASE("trig series: positivity, sandwich, self-consistency") {
  const auto op = trig_operator(0.1);
  const SpaceTimePoint pole{Vec{0.0}, 0.0};
  SeriesGammaField field(op, pole, quick_config());

  std::vector<SpaceTimePoint> samples;
  for (int i = 0; i <= 10; ++i)
    for (int k = 1; k <= 8; ++k)
      samples.push_back(SpaceTimePoint{Vec{-1.2 + 0.24 * i}, -0.05 - 0.115 * k});

  SUBCASE("positivity") {
    for (const auto& z : samples) CHECK(field.value(z) > 0.0);
  }
  SUBCASE("diagonal sandwich with eta = 1/2") {
    const auto rep = check_diagonal_ratio(field, op, 0.5, samples);
    CHECK(rep.found);
    CHECK(rep.worst_ratio_low >= 0.5);
    CHECK(rep.worst_ratio_high <= 1.5);
    CHECK(rep.samples_above > 0);
  }
  SUBCASE("ratio tends to 1 along the diagonal (concentration)") {
    double prev = 1e300;
    for (double gap : {0.4, 0.2, 0.1, 0.05}) {
      const SpaceTimePoint z{Vec{0.0}, -gap};
      const double ratio = field.value(z) / field.parametrix_value(z);
      const double dev = std::abs(ratio - 1.0);
      CHECK(dev < prev + 1e-12);
      prev = dev;
    }
    CHECK(prev < 5e-3);
  }
  SUBCASE("refinement self-consistency") {
    SeriesConfig fine = quick_config();
    fine.time_nodes = 36;
    fine.space_nodes = 72;
    fine.lattice_time_nodes = 54;
    fine.lattice_space_nodes = 216;
    SeriesGammaField refined(op, pole, fine);
    for (const auto& z : {samples[13], samples[47], samples[81]}) {
      const double a = field.value(z), b = refined.value(z);
      CHECK(std::abs(a - b) <= 1e-4 * std::abs(b) + 1e-12);
    }
  }
  SUBCASE("certified tail bound decreases with the truncation order") {
    for (double gap : {0.3, 0.8}) CHECK(tail_bound(4, gap, 1.0, 0.2) < tail_bound(3, gap, 1.0, 0.2));
    CHECK(field.series_tail_bound(0.5) > 0.0);
  }
}

TEST_CASE("adjoint PDE residual decreases with the truncation order") {
  const auto op = trig_operator(0.1);
  SeriesGammaField field(op, {Vec{0.0}, 0.0}, quick_config());
  std::vector<SpaceTimePoint> samples;
  for (int i = 0; i <= 6; ++i)
    for (int k = 1; k <= 4; ++k)
      samples.push_back(SpaceTimePoint{Vec{-0.9 + 0.3 * i}, -0.08 - 0.2 * k});
  const auto rep = check_pde_residual(field, op, samples);
  REQUIRE(rep.max_residual_by_k.size() == 4);
  CHECK(rep.max_residual_by_k[2] < rep.max_residual_by_k[0]);
  CHECK(rep.monotone_decreasing);

  // Constant coefficients: residual is pure finite-difference noise.
  const auto heat = heat_operator(1);
  SeriesGammaField hfield(heat, {Vec{0.0}, 0.0}, quick_config());
  const auto hrep = check_pde_residual(hfield, heat, samples);
  CHECK(hrep.max_residual_by_k[0] < 1e-6);

  // Residual grows toward the pole (reported, not failed).
  SolutionField as_solution;
  as_solution.value = [&field](const SpaceTimePoint& z) { return field.value(z); };
  const double far = std::abs(apply_adjoint(op, as_solution, {Vec{0.0}, -0.5}));
  const double near = std::abs(apply_adjoint(op, as_solution, {Vec{0.0}, -0.02}));
  CHECK(near > far);
}

TEST_CASE("global bounds: mass and envelope") {
  const auto heat = heat_operator(1);
  ConstantGammaField exact(Mat::identity(1), {Vec{0.0}, 0.0});
  const auto rep = check_global_bounds(exact, heat, {}, {0.1, 0.5});
  CHECK(rep.mass_ok);
  for (const auto& row : rep.mass) CHECK(row.mass == doctest::Approx(1.0).epsilon(1e-8));

  const auto trig = trig_operator(0.1);
  SeriesGammaField field(trig, {Vec{0.0}, 0.0}, quick_config());
  const auto rep2 = check_global_bounds(field, trig, {}, {0.1, 0.5}, 1200);
  CHECK(rep2.mass_ok);
}

TEST_CASE("series engine rejects unsupported operators") {
  auto op = heat_operator(1);
  op.c = [](const SpaceTimePoint&) { return 1.0; };
  CHECK_THROWS(SeriesGammaField(op, {Vec{0.0}, 0.0}, quick_config()));
  auto op2 = heat_operator(2);
  CHECK_THROWS(SeriesGammaField(op2, {Vec{0.0, 0.0}, 0.0}, quick_config()));
  const auto trig = trig_operator(0.1);
  SeriesGammaField field(trig, {Vec{0.0}, 0.0}, quick_config());
  CHECK_THROWS(field.value({Vec{0.0}, 0.5}));   // wrong time order
  CHECK_THROWS(field.value({Vec{0.0}, -1.5}));  // beyond the horizon
}

#include <thread>

TEST_CASE("concurrent evaluation from several workers matches serial values") {
  const auto op = trig_operator(0.1);
  SeriesGammaField field(op, {Vec{0.0}, 0.0}, quick_config());
  std::vector<SpaceTimePoint> pts;
  for (int i = 0; i < 64; ++i) pts.push_back(SpaceTimePoint{Vec{-1.0 + 0.03 * i}, -0.05 - 0.012 * i});
  std::vector<double> serial(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) serial[i] = field.value(pts[i]);
  std::vector<double> parallel(pts.size(), 0.0);
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < pts.size(); i += 4) parallel[i] = field.value(pts[i]);
    });
  for (auto& th : workers) th.join();
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(parallel[i] == serial[i]);
}

TEST_CASE("one-shot gamma_series matches the field and carries its tail bound") {
  const auto op = trig_operator(0.1);
  SeriesConfig cfg = quick_config();
  const SpaceTimePoint z0{Vec{0.0}, 0.0}, z{Vec{0.3}, -0.4};
  const auto [value, tail] = gamma_series(op, z0, z, cfg);
  SeriesGammaField field(op, z0, cfg);
  CHECK(value == doctest::Approx(field.value(z)).epsilon(1e-14));
  CHECK(tail == doctest::Approx(field.series_tail_bound(0.4)).epsilon(1e-14));
  CHECK(tail > 0.0);
  // The worst-case majorant tightens fast as the time gap shrinks; a caller
  // flags refinement when it exceeds the requested tolerance.
  CHECK(field.series_tail_bound(0.1) < field.series_tail_bound(0.4));
  CHECK(field.series_tail_bound(0.02) < 0.05);
}
