#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pmvf/level_set_geometry.hpp"
#include "test_support.hpp"

using namespace pmvf;
using testkit::heat_operator;
using testkit::kPi;

namespace {
const SpaceTimePoint kOrigin{Vec{0.0}, 0.0};
}

TEST_CASE("ellipsoid slice closed form, heat N=1") {
  const auto op = heat_operator(1);
  const double r = 1.0;
  // Nonempty iff 4 pi (t0 - t) < (r^N/2)^{2/N}; depth (r/2)^2/(4 pi).
  const double depth = ellipsoid_depth(op, kOrigin, r);
  CHECK(depth == doctest::Approx(0.25 / (4.0 * kPi)).epsilon(1e-13));
  CHECK(ellipsoid_slice(op, kOrigin, r, -0.99 * depth).empty == false);
  CHECK(ellipsoid_slice(op, kOrigin, r, -1.01 * depth).empty == true);
  // Slice radius shrinks to zero near t0.
  double prev = 1e300;
  for (double gap : {0.5 * depth, 0.1 * depth, 0.01 * depth, 1e-4 * depth}) {
    const auto s = ellipsoid_slice(op, kOrigin, r, -gap);
    REQUIRE(!s.empty);
    CHECK(s.axis_halfwidth(0) < prev);
    prev = s.axis_halfwidth(0);
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("diagonal matrix stretches the slice by sqrt(a)") {
  const auto op1 = heat_operator(1);
  ParabolicOperator op4 = heat_operator(1);
  op4.a = [](const SpaceTimePoint&) {
    Mat a(1);
    a(0, 0) = 4.0;
    return a;
  };
  // Radii chosen so log(2/r) + (1/2) log det A agree: r4 = 2 r1.
  const double r1 = 0.8, r4 = 1.6, t = -0.004;
  const auto s1 = ellipsoid_slice(op1, kOrigin, r1, t);
  const auto s4 = ellipsoid_slice(op4, kOrigin, r4, t);
  REQUIRE(!s1.empty);
  REQUIRE(!s4.empty);
  CHECK(s4.axis_halfwidth(0) == doctest::Approx(2.0 * s1.axis_halfwidth(0)).epsilon(1e-12));
}

TEST_CASE("heat ball geometry") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const double r = 1.0;
  const BallRegion reg = make_ball_region(field, r, 0);
  CHECK(reg.depth >= testkit::heat_depth(r) * (1.0 - 1e-9));
  CHECK(reg.depth <= testkit::heat_depth(r) * 1.001);

  SUBCASE("interior tests at the closed-form extremes") {
    const double s_star = r * r / (4.0 * kPi * std::exp(1.0));
    const double w = r / std::sqrt(2.0 * kPi * std::exp(1.0));
    CHECK(reg.interior({Vec{0.999 * w}, -s_star}));
    CHECK(!reg.interior({Vec{1.001 * w}, -s_star}));
    CHECK(reg.interior({Vec{0.0}, -0.999 * testkit::heat_depth(r)}));
    CHECK(!reg.interior({Vec{0.0}, -1.001 * testkit::heat_depth(r)}));
  }
  SUBCASE("pole sits on the topological boundary") {
    const ParabolicBall ball = extract_ball(field, r, 80, 0);
    for (int ix = 0; ix <= ball.nx(); ++ix) CHECK(!ball.interior(0, ix));  // no interior at t >= t0
    for (double eps : {1e-4, 1e-6, 1e-8}) CHECK(reg.interior({Vec{0.0}, -eps}));
  }
  SUBCASE("balls shrink to the pole as r -> 0") {
    double prev = 1e300;
    for (double rr : {0.5, 0.25, 0.1, 0.02}) {
      const BallRegion small = make_ball_region(field, rr, 0);
      const double diam = std::hypot(small.x_hi[0] - small.x_lo[0], small.depth);
      CHECK(diam < prev);
      prev = diam;
    }
    CHECK(prev < 0.03);
  }
  SUBCASE("nesting on the classification grid") {
    const ParabolicBall ball = extract_ball(field, r, 120, 0);
    CHECK(ball.interior_count_at(0.5) < ball.interior_count_at(0.8));
    CHECK(ball.interior_count_at(0.8) < ball.interior_count_at(1.0));
    for (int it = 0; it <= ball.nt(); it += 3)
      for (int ix = 0; ix <= ball.nx(); ix += 3)
        if (ball.interior_at(0.5, it, ix)) CHECK(ball.interior_at(1.0, it, ix));
  }
}

TEST_CASE("sphere mesh: level accuracy, length oracle, normals") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const double r = 1.0;
  const LevelSurfaceMesh mesh = extract_sphere(field, r, 420);
  REQUIRE(!mesh.points.empty());

  SUBCASE("bisection contract: points sit on the level set (pole points flagged)") {
    const double level = 1.0 / r;
    std::size_t snapped = 0;
    for (const auto& p : mesh.points) {
      if (p.near_critical) {
        ++snapped;  // closure point at the pole
        continue;
      }
      CHECK(std::abs(field.value(p.p) - level) <= 1e-8 * level);
    }
    CHECK(snapped <= 2);
  }
  SUBCASE("total length against the clustered polyline oracle") {
    const double oracle = testkit::heat_sphere_length_oracle(r);
    CHECK(mesh.total_measure == doctest::Approx(oracle).epsilon(1e-3));
  }
  SUBCASE("normals are unit or flagged") {
    for (const auto& p : mesh.points) {
      if (p.near_critical) continue;
      CHECK(std::sqrt(p.normal_x.norm2() + p.normal_t * p.normal_t) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(mesh.near_critical_count <= 2);  // only the pole closure points
  }
  SUBCASE("stationary-slice geometry: d_t Gamma = 0 at the widest point, d_x Gamma = 0 at the deepest") {
    double best_x = 0.0, best_gap = 0.0;
    SurfacePoint widest, deepest;
    for (const auto& p : mesh.points) {
      if (p.near_critical) continue;
      if (std::abs(p.p.x[0]) > best_x) {
        best_x = std::abs(p.p.x[0]);
        widest = p;
      }
      if (-p.p.t > best_gap) {
        best_gap = -p.p.t;
        deepest = p;
      }
    }
    CHECK(best_x == doctest::Approx(r / std::sqrt(2.0 * kPi * std::exp(1.0))).epsilon(1e-4));
    // Widest point: the slice width is stationary, the normal is spatial.
    CHECK(std::abs(widest.normal_t) < 0.05);
    CHECK(std::abs(widest.normal_x[0]) > 0.99);
    // Deepest point: x = x0, the gradient is purely temporal.
    CHECK(best_gap == doctest::Approx(testkit::heat_depth(r)).epsilon(1e-3));
    CHECK(std::abs(deepest.normal_x[0]) < 0.05);
    CHECK(std::abs(deepest.normal_t) > 0.99);
  }
  SUBCASE("infinite grad_epsilon flags every point") {
    const LevelSurfaceMesh flagged = extract_sphere(field, r, 60, 1e300);
    CHECK(flagged.near_critical_count == flagged.points.size());
    for (const auto& p : flagged.points) {
      // Either a unit normal or the flag; never both absent.
      const bool has_normal = std::abs(std::sqrt(p.normal_x.norm2() + p.normal_t * p.normal_t) - 1.0) < 1e-9;
      CHECK((has_normal || p.near_critical));
    }
  }
}

TEST_CASE("N=2 sphere mesh is watertight enough to hit the level") {
  ConstantGammaField field(Mat::identity(2), SpaceTimePoint{Vec{0.0, 0.0}, 0.0});
  const double r = 0.8;
  const LevelSurfaceMesh mesh = extract_sphere(field, r, 90);
  REQUIRE(mesh.points.size() > 100);
  const double level = std::pow(r, -2.0);
  std::size_t snapped = 0;
  for (std::size_t i = 0; i < mesh.points.size(); ++i) {
    if (mesh.points[i].near_critical) {
      ++snapped;
      continue;
    }
    if (i % 23 == 0) CHECK(std::abs(field.value(mesh.points[i].p) - level) <= 1e-8 * level);
  }
  CHECK(snapped <= 8);
  for (const auto& p : mesh.points) CHECK(p.weight >= 0.0);
}

TEST_CASE("inclusion lemma") {
  const auto op = heat_operator(1);
  ConstantGammaField field(Mat::identity(1), kOrigin);
  // Heat: both inclusions hold at every radius (factor-2 margin).
  const auto rep = check_inclusion_lemma(op, field, {0.25, 0.5, 1.0, 2.0}, 120);
  for (const auto& row : rep.rows) {
    CHECK(row.inner_ok);
    CHECK(row.outer_ok);
  }
  CHECK(rep.r_hat == doctest::Approx(2.0));
}

TEST_CASE("parabolic rescale") {
  const SpaceTimePoint z0{Vec{0.4}, -0.3};
  const SpaceTimePoint z{Vec{1.2}, -0.8};
  SUBCASE("r = 1 is translation") {
    const auto w = parabolic_rescale(z, z0, 1.0);
    CHECK(w.x[0] == doctest::Approx(z0.x[0] + z.x[0]));
    CHECK(w.t == doctest::Approx(z0.t + z.t));
  }
  SUBCASE("round trip is exact") {
    for (double r : {0.3, 1.7}) {
      const auto w = parabolic_rescale_inverse(parabolic_rescale(z, z0, r), z0, r);
      CHECK(w.x[0] == doctest::Approx(z.x[0]).epsilon(1e-14));
      CHECK(w.t == doctest::Approx(z.t).epsilon(1e-14));
    }
  }
  SUBCASE("Omega_{kr}^* maps onto Omega_k^* under the inverse map") {
    const auto op = heat_operator(1);
    const double r = 0.6, k = 2.0;
    for (double gx : {-0.8, -0.1, 0.3, 0.9}) {
      for (double gt : {-0.9, -0.3, -0.05}) {
        const SpaceTimePoint zz{Vec{gx}, gt};  // candidate in rescaled coordinates
        const SpaceTimePoint phys = parabolic_rescale(zz, z0, r);
        const auto slice_big = ellipsoid_slice(op, z0, k * r, phys.t);
        const bool in_big = !slice_big.empty && quad_form(slice_big.a_inv, phys.x - z0.x) <= slice_big.rhs;
        const SpaceTimePoint unit{Vec{z0.x[0] + zz.x[0]}, z0.t + zz.t};
        const auto slice_unit = ellipsoid_slice(op, z0, k, unit.t);
        const bool in_unit = !slice_unit.empty && quad_form(slice_unit.a_inv, unit.x - z0.x) <= slice_unit.rhs;
        CHECK(in_big == in_unit);
      }
    }
  }
}

TEST_CASE("gradient estimate on the heat ball") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const double r = 1.0;
  std::vector<SpaceTimePoint> samples;
  const ParabolicBall ball = extract_ball(field, r, 150, 0);
  for (int it = 1; it <= ball.nt(); it += 2)
    for (int ix = 0; ix <= ball.nx(); ix += 2)
      if (ball.interior(it, ix)) samples.push_back(ball.node(it, ix));
  const auto rep = check_gradient_estimate(field, r, samples);
  CHECK(rep.samples > 100);
  // |d_x Gamma| = (|x - x0|/(2(t0-t))) Gamma, so the fitted C is <= 1/2 < 1.
  CHECK(rep.fitted_c <= 0.5 + 1e-9);
  CHECK(rep.fitted_c > 0.2);
  // On the x = x0 slice the left side vanishes.
  const Vec g = field.grad_x({Vec{0.0}, -0.05});
  CHECK(g[0] == doctest::Approx(0.0));
}

TEST_CASE("degenerate requests throw") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  CHECK_THROWS(make_ball_region(field, -1.0, 0));
  CHECK_THROWS(extract_sphere(field, 1.0, 1));
  CHECK_THROWS(parabolic_rescale(kOrigin, kOrigin, 0.0));
}

TEST_CASE("constant-A ball boundary matches the closed form within one cell") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const double r = 1.0;
  const ParabolicBall ball = extract_ball(field, r, 200, 0);
  const double dx_cell = (ball.region().x_hi[0] - ball.region().x_lo[0]) / ball.nx();
  for (int it = 10; it <= ball.nt() - 10; it += 17) {
    const double s = -ball.node(it, 0).t;
    const double d_exact = testkit::heat_halfwidth(r, s);
    if (d_exact <= 0.0) continue;
    // Rightmost interior node on this row.
    double d_grid = -1.0;
    for (int ix = 0; ix <= ball.nx(); ++ix)
      if (ball.interior(it, ix)) d_grid = std::max(d_grid, ball.node(it, ix).x[0]);
    REQUIRE(d_grid >= 0.0);
    CHECK(std::abs(d_grid - d_exact) <= dx_cell);
  }
}
