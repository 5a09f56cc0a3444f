#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pmvf/harnack.hpp"
#include "test_support.hpp"

using namespace pmvf;
using testkit::constant_field;
using testkit::heat_operator;
using testkit::kPi;

namespace {

const SpaceTimePoint kOrigin{Vec{0.0}, 0.0};

FieldFactory heat_factory() {
  return [](const SpaceTimePoint& pole) -> std::unique_ptr<GammaField> {
    return std::make_unique<ConstantGammaField>(Mat::identity(1), pole);
  };
}

SolutionField gaussian_u(double xi, double tau, double weight = 1.0) {
  SolutionField u;
  auto spec = std::make_shared<GaussianKernelSpec>(Mat::identity(1));
  const SpaceTimePoint pole{Vec{xi}, tau};
  u.value = [spec, pole, weight](const SpaceTimePoint& z) { return weight * spec->value(z, pole); };
  return u;
}

}  // namespace

TEST_CASE("compact set K_r^{(m)}") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const double r = 0.3;
  SUBCASE("sharp lambda: the closure survives at the cut time") {
    const auto krm = compact_set_krm(field, r, 3, 1.0, 260);
    CHECK(!krm.empty);
    CHECK(krm.cut_gap == doctest::Approx(r * r / (4.0 * kPi)).epsilon(1e-12));
    // Every retained point sits at/below the cut and near the deepest point.
    for (const auto& z : krm.points) {
      CHECK(z.t <= -krm.cut_gap * (1.0 - 1e-6));
      CHECK(std::abs(z.x[0]) < 0.1 * r);
    }
    // The deepest closure point (x0, t0 - r^2/(4 pi)) is represented.
    double best = 1e300;
    for (const auto& z : krm.points) best = std::min(best, std::hypot(z.x[0], z.t + krm.cut_gap));
    CHECK(best < 0.02 * r);
  }
  SUBCASE("tiny radius stays nonempty") { CHECK(!compact_set_krm(field, 0.1, 3, 1.0, 220).empty); }
  SUBCASE("conservative lambda empties the set and is reported, not thrown") {
    const auto krm = compact_set_krm(field, r, 3, 0.5, 220);
    CHECK(krm.empty);
  }
}

TEST_CASE("closed-form m^- and the C_K identity") {
  // Independent arrangement of the displayed formula at lambda=1, N=1, m=3, r=1:
  // (3 omega_3 / 5) (1/(2 pi)) (4 log(5/4))^{5/2}.
  const double omega3 = 4.0 * kPi / 3.0;
  const double oracle = (3.0 * omega3 / 5.0) * (1.0 / (2.0 * kPi)) * std::pow(4.0 * std::log(1.25), 2.5);
  CHECK(closed_form_m_minus(1, 3, 1.0, 1.0) == doctest::Approx(oracle).epsilon(1e-14));
  // r-scaling r^{2m-4} and lambda power.
  CHECK(closed_form_m_minus(1, 3, 1.0, 0.5) == doctest::Approx(oracle * 0.25).epsilon(1e-14));
  // C_K assembled exactly from the stored fields.
  const double ck = assemble_c_k(1, 3, 2.5, 0.7, 0.01);
  CHECK(ck == doctest::Approx(std::pow(5.0, 4) * 2.5 / (std::pow(0.7, 4) * 0.01)).epsilon(1e-14));
  // Monotone: nondecreasing in M+, nonincreasing in m-.
  CHECK(assemble_c_k(1, 3, 3.0, 0.7, 0.01) > ck);
  CHECK(assemble_c_k(1, 3, 2.5, 0.7, 0.02) < ck);
}

TEST_CASE("claim iv spot check: M_{5r}^{(m)} >= m^- on the constrained set") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const auto op = heat_operator(1);
  KernelEvaluator ev(field, op);
  const int m = 3;
  const double r = 0.3;
  const double m_minus = closed_form_m_minus(1, m, 1.0, r);
  const double cut = r * r / (4.0 * kPi);
  // Sample zeta in Omega_{4r}^{(m)} with tau <= t0 - cut.
  const ParabolicBall big(make_ball_region(field, 4.0 * r, m), 200, 200);
  double worst = 1e300;
  std::size_t checked = 0;
  for (int it = 1; it <= big.nt(); it += 3)
    for (int ix = 0; ix <= big.nx(); ix += 3) {
      if (!big.interior(it, ix)) continue;
      const SpaceTimePoint z = big.node(it, ix);
      if (z.t > -cut) continue;
      worst = std::min(worst, ev.kernel_extended(z, 5.0 * r, m).m_rm);
      ++checked;
    }
  CHECK(checked > 500);
  CHECK(worst >= m_minus);
}

TEST_CASE("compute_constants on the heat operator") {
  const auto op = heat_operator(1);
  auto hc = compute_constants(op, heat_factory(), kOrigin, 3, {0.3}, 200);
  CHECK(hc.theta >= 0.5);
  CHECK(hc.m_plus > 0.0);
  CHECK(hc.m_minus == doctest::Approx(closed_form_m_minus(1, 3, 1.0, 0.3)).epsilon(1e-14));
  CHECK(hc.c_k == doctest::Approx(assemble_c_k(1, 3, hc.m_plus, hc.theta, hc.m_minus)).epsilon(1e-14));
  CHECK_THROWS(compute_constants(op, heat_factory(), kOrigin, 2, {0.3}, 100));  // m must exceed 2

  SUBCASE("ball Harnack: constants dominate the empirical ratios") {
    ConstantGammaField field(Mat::identity(1), kOrigin);
    const double r = 0.3;
    const auto one = constant_field(1.0, 1);
    const auto b1 = harnack_ball_check(one, field, r, 3, op.lambda, hc, 240);
    CHECK(b1.ratio == doctest::Approx(1.0));
    CHECK(b1.within);

    const auto u2 = gaussian_u(2.0, -5.0);
    const auto b2 = harnack_ball_check(u2, field, r, 3, op.lambda, hc, 240);
    CHECK(b2.within);
    CHECK(b2.ratio > 0.0);

    SolutionField u3;
    u3.value = [](const SpaceTimePoint& z) {
      GaussianKernelSpec spec(Mat::identity(1));
      return spec.value(z, {Vec{2.0}, -5.0}) + 0.7 * spec.value(z, {Vec{-1.5}, -3.0});
    };
    const auto b3 = harnack_ball_check(u3, field, r, 3, op.lambda, hc, 240);
    CHECK(b3.within);

    SolutionField neg = constant_field(-1.0, 1);
    CHECK_THROWS(harnack_ball_check(neg, field, r, 3, op.lambda, hc, 100));
  }
}

TEST_CASE("slice constants") {
  const auto op = heat_operator(1);
  auto hc = compute_constants(op, heat_factory(), kOrigin, 3, {0.3}, 180);
  fit_slice_constants(op, heat_factory(), kOrigin, 0.3, 140, hc);
  CHECK(hc.kappa1 > 1.0 / (4.0 * kPi));
  CHECK(hc.kappa1 < 1.0);
  CHECK(hc.theta1 > 0.0);
  CHECK(hc.theta1 < 1.0);
  CHECK(hc.c_d > 1.0);
}

TEST_CASE("Harnack chain construction") {
  const double r0 = 0.5, kappa1 = 0.12, theta1 = 0.5;
  SUBCASE("pure time descent picks the small-slope case with y = 0") {
    const SpaceTimePoint zp{Vec{0.2}, 0.0};
    const SpaceTimePoint zm{Vec{0.2}, -2.5 * kappa1 * r0 * r0};
    const auto chain = build_chain(zp, zm, r0, kappa1, theta1);
    CHECK(chain.small_slope);
    CHECK(chain.m == 3);
    CHECK(chain.y.norm() == doctest::Approx(0.0));
    CHECK(chain.points.front().x[0] == doctest::Approx(zp.x[0]));
    CHECK(chain.points.back().x[0] == doctest::Approx(zm.x[0]).epsilon(1e-12));
    CHECK(chain.points.back().t == doctest::Approx(zm.t).epsilon(1e-12));
  }
  SUBCASE("random endpoint pairs satisfy every chain invariant") {
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double iota = 0.25, kappa = 0.5, mu = 0.75, theta_c = 0.5;
    for (int trial = 0; trial < 200; ++trial) {
      SpaceTimePoint zp{Vec{theta_c * uni(rng)}, -iota * 0.5 * (uni(rng) + 1.0) * 0.99 - 1e-4};
      SpaceTimePoint zm{Vec{theta_c * uni(rng)}, -kappa - (mu - kappa) * 0.5 * (uni(rng) + 1.0) * 0.99 - 1e-6};
      const auto chain = build_chain(zp, zm, r0, kappa1, theta1);
      const double dt = zp.t - zm.t;
      const double dist = std::abs(zp.x[0] - zm.x[0]);
      // Endpoints reproduce exactly.
      CHECK(std::abs(chain.points.front().x[0] - zp.x[0]) < 1e-12);
      CHECK(std::abs(chain.points.back().x[0] - zm.x[0]) < 1e-12);
      CHECK(std::abs(chain.points.back().t - zm.t) < 1e-12);
      // Structural bounds.
      CHECK(chain.y.norm() <= theta1 * (1.0 + 1e-12));
      CHECK(chain.r <= r0 * (1.0 + 1e-12));
      // Case-dependent integer brackets.
      if (chain.small_slope) {
        CHECK((chain.m - 1) * kappa1 * r0 * r0 < dt + 1e-15);
        CHECK(dt <= chain.m * kappa1 * r0 * r0 * (1.0 + 1e-12));
      } else {
        const double q = kappa1 * dist * dist / (theta1 * theta1 * dt);
        CHECK(chain.m - 1 < q + 1e-12);
        CHECK(q <= chain.m + 1e-12);
        // Proof bound: t+ - t- >= kappa - iota gives m < 4 kappa1 / (theta1^2 (kappa - iota)).
        CHECK(chain.m < 4.0 * kappa1 / (theta1 * theta1 * (kappa - iota)));
      }
      // Steps: w_j in D_r(w_{j-1}) and the exact (eq-wj) form.
      for (int j = 1; j <= chain.m; ++j) {
        const auto& prev = chain.points[j - 1];
        const auto& cur = chain.points[j];
        CHECK(std::abs(prev.t - cur.t - kappa1 * chain.r * chain.r) < 1e-12);
        CHECK(std::abs(cur.x[0] - prev.x[0]) <= theta1 * chain.r * (1.0 + 1e-9));
        const double expect_x = zp.x[0] + j * chain.r * chain.y[0];
        const double expect_t = zp.t - j * kappa1 * chain.r * chain.r;
        CHECK(std::abs(cur.x[0] - expect_x) < 1e-11);
        CHECK(std::abs(cur.t - expect_t) < 1e-11);
      }
    }
  }
  SUBCASE("order error") {
    CHECK_THROWS_AS(build_chain({Vec{0.0}, -1.0}, {Vec{0.0}, 0.0}, r0, kappa1, theta1), std::domain_error);
  }
}

TEST_CASE("invariant Harnack check") {
  const auto op = heat_operator(1);
  auto hc = compute_constants(op, heat_factory(), kOrigin, 3, {0.3}, 180);
  fit_slice_constants(op, heat_factory(), kOrigin, 0.3, 140, hc);
  hc.r1 = 0.5;

  Cylinder lower{kOrigin, 1.0, CylinderKind::Lower};
  Cylinder upper{kOrigin, 1.0, CylinderKind::Upper};

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>> pairs;
  for (int i = 0; i < 20; ++i) {
    SpaceTimePoint zp{Vec{0.5 * uni(rng)}, -0.25 * 0.5 * (uni(rng) + 1.0) * 0.98 - 1e-3};
    SpaceTimePoint zm{Vec{0.5 * uni(rng)}, -0.5 - 0.25 * 0.5 * (uni(rng) + 1.0) * 0.98 - 1e-6};
    pairs.emplace_back(zp, zm);
  }

  SUBCASE("constant solution: ratio 1") {
    const auto one = constant_field(1.0, 1);
    const auto rep = invariant_harnack_check(one, kOrigin, 1.0, lower, upper, hc, pairs, 40);
    CHECK(rep.log_ratio == doctest::Approx(0.0));
    CHECK(rep.within);
    CHECK(rep.all_chains_ok);
  }
  SUBCASE("positive caloric solution on Q_1(0)") {
    const auto u = gaussian_u(0.0, -10.0);
    const auto rep = invariant_harnack_check(u, kOrigin, 1.0, lower, upper, hc, pairs, 40);
    CHECK(rep.log_ratio > 0.0);
    CHECK(rep.within);
    CHECK(rep.all_chains_ok);
    CHECK(rep.r0 == doctest::Approx(0.5));
  }
}

TEST_CASE("cylinder membership") {
  Cylinder q{kOrigin, 1.0, CylinderKind::Full};
  CHECK(q.contains({Vec{0.5}, -0.5}));
  CHECK(!q.contains({Vec{1.5}, -0.5}));
  CHECK(!q.contains({Vec{0.0}, 0.5}));
  Cylinder lower{kOrigin, 1.0, CylinderKind::Lower};
  Cylinder upper{kOrigin, 1.0, CylinderKind::Upper};
  // Q+- sit inside Q as point sets, with 0 < iota < kappa < mu < 1.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 400; ++i) {
    const SpaceTimePoint z{Vec{u(rng)}, -std::abs(u(rng))};
    if (lower.contains(z) || upper.contains(z)) CHECK(q.contains(z));
    if (lower.contains(z)) CHECK(!upper.contains(z));
  }
}
