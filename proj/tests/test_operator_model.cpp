#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_support.hpp"

using namespace pmvf;
using testkit::caloric_poly;
using testkit::constant_field;
using testkit::heat_operator;
using testkit::trig_operator;

TEST_CASE("caloric polynomial is annihilated by the heat operator") {
  const auto op = heat_operator(1);
  const auto u = caloric_poly(1, 0);
  for (double x : {-1.0, 0.0, 0.7})
    for (double t : {-0.5, 0.0, 1.0})
      CHECK(apply_operator(op, u, SpaceTimePoint{Vec{x}, t}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("linear caloric function") {
  const auto op = heat_operator(1);
  SolutionField u;
  u.value = [](const SpaceTimePoint& z) { return z.x[0]; };
  CHECK(apply_operator(op, u, SpaceTimePoint{Vec{0.3}, 0.2}) == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("L 1 = c") {
  auto op = heat_operator(1);
  op.c = [](const SpaceTimePoint&) { return 1.0; };
  const auto one = constant_field(1.0, 1);
  CHECK(apply_operator(op, one, SpaceTimePoint{Vec{0.0}, 0.0}) == doctest::Approx(1.0));
  // On every point, apply_operator(1) = c(z) exactly.
  auto op2 = heat_operator(1);
  op2.c = [](const SpaceTimePoint& z) { return std::sin(z.x[0]) + z.t; };
  for (double x : {-2.0, 0.1, 1.5})
    CHECK(apply_operator(op2, one, SpaceTimePoint{Vec{x}, 0.4}) == doctest::Approx(std::sin(x) + 0.4));
}

TEST_CASE("adjoint equals time-reflected operator for constant A, b=c=0") {
  const auto op = heat_operator(1);
  SolutionField v;
  v.value = [](const SpaceTimePoint& z) { return std::exp(0.2 * z.x[0]) * std::cos(z.t); };
  SolutionField v_reflected;
  v_reflected.value = [](const SpaceTimePoint& z) { return std::exp(0.2 * z.x[0]) * std::cos(-z.t); };
  for (double x : {-0.5, 0.2, 1.1}) {
    for (double t : {-0.4, 0.3}) {
      const double lhs = apply_adjoint(op, v, SpaceTimePoint{Vec{x}, t});
      const double rhs = apply_operator(op, v_reflected, SpaceTimePoint{Vec{x}, -t});
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
  }
}

TEST_CASE("adjoint of a constant picks up c - div b") {
  auto op = heat_operator(2);
  const auto one = constant_field(1.0, 2);
  SUBCASE("b = 0") {
    op.c = [](const SpaceTimePoint& z) { return 2.0 + z.t; };
    CHECK(apply_adjoint(op, one, SpaceTimePoint{Vec{0.0, 0.0}, 0.5}) == doctest::Approx(2.5));
  }
  SUBCASE("general b and c") {
    op.c = [](const SpaceTimePoint&) { return 1.25; };
    op.b = [](const SpaceTimePoint& z) { return Vec{0.5 * z.x[0], 0.5 * z.x[1]}; };
    op.div_b = [](const SpaceTimePoint&) { return 1.0; };
    CHECK(apply_adjoint(op, one, SpaceTimePoint{Vec{0.3, -0.4}, 0.0}) == doctest::Approx(0.25));
  }
}

TEST_CASE("constant A, b=c=0: operator equals sum a_ij d2u - du/dt") {
  Mat a = Mat::identity(2);
  a(0, 0) = 2.0;
  a(0, 1) = a(1, 0) = 0.3;
  ParabolicOperator op;
  op.dim = 2;
  op.a = [a](const SpaceTimePoint&) { return a; };
  op.da = [](const SpaceTimePoint&) { return Vec(2); };
  SolutionField u;
  u.value = [](const SpaceTimePoint& z) { return std::sin(z.x[0]) * std::cos(2.0 * z.x[1]) + z.t * z.t; };
  const SpaceTimePoint z{Vec{0.4, -0.2}, 0.3};
  const double direct = apply_operator(op, u, z);
  const Mat h = u.hessian(z);
  double expect = -u.time_derivative(z);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) expect += a(i, j) * h(i, j);
  CHECK(direct == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("hypothesis verification") {
  std::vector<SpaceTimePoint> samples;
  for (int i = 0; i <= 12; ++i)
    for (int k = 0; k <= 4; ++k)
      samples.push_back(SpaceTimePoint{Vec{-testkit::kPi + 2.0 * testkit::kPi * i / 12.0}, 0.25 * k});
  std::vector<Vec> dirs{Vec{1.0}};

  SUBCASE("constant coefficients: zero quotients, bounds hold") {
    const auto op = heat_operator(1);
    const auto rep = verify_hypotheses(op, samples, dirs);
    CHECK(rep.all_ok());
    for (const auto& h : rep.holder) CHECK(h.worst == doctest::Approx(0.0));
  }
  SUBCASE("trig perturbation with honest constants passes") {
    auto op = trig_operator(0.1);
    op.lambda = 0.9;
    op.Lambda = 1.1;
    const auto rep = verify_hypotheses(op, samples, dirs);
    CHECK(rep.all_ok());
    CHECK(rep.holder.front().worst <= 0.1 + 1e-12);
  }
  SUBCASE("declared Lambda below the spectrum is reported") {
    ParabolicOperator op;
    op.dim = 2;
    op.a = [](const SpaceTimePoint&) {
      Vec d{2.0, 2.0};
      return Mat::diagonal(d);
    };
    op.lambda = 0.5;
    op.Lambda = 1.0;
    std::vector<SpaceTimePoint> pts{SpaceTimePoint{Vec{0.0, 0.0}, 0.0}};
    std::vector<Vec> dirs2{Vec{1.0, 0.0}};
    const auto rep = verify_hypotheses(op, pts, dirs2);
    CHECK(!rep.spectral_ok);
    CHECK(rep.worst_upper_violation == doctest::Approx(1.0));
  }
  SUBCASE("enlarging the sample set never shrinks the quotients") {
    const auto op = trig_operator(0.3);
    std::vector<SpaceTimePoint> small(samples.begin(), samples.begin() + 10);
    const auto rep_small = verify_hypotheses(op, small, dirs);
    const auto rep_full = verify_hypotheses(op, samples, dirs);
    for (std::size_t i = 0; i < rep_small.holder.size(); ++i)
      CHECK(rep_full.holder[i].worst >= rep_small.holder[i].worst - 1e-15);
  }
}

TEST_CASE("finite differences agree with analytic derivatives") {
  SolutionField u;
  u.value = [](const SpaceTimePoint& z) { return std::sin(z.x[0]) * std::exp(-0.3 * z.t); };
  SolutionField ua = u;
  ua.grad = [](const SpaceTimePoint& z) { return Vec{std::cos(z.x[0]) * std::exp(-0.3 * z.t)}; };
  ua.dt = [](const SpaceTimePoint& z) { return -0.3 * std::sin(z.x[0]) * std::exp(-0.3 * z.t); };
  const SpaceTimePoint z{Vec{0.8}, 0.1};
  CHECK(u.gradient(z)[0] == doctest::Approx(ua.grad(z)[0]).epsilon(1e-7));
  CHECK(u.time_derivative(z) == doctest::Approx(ua.dt(z)).epsilon(1e-7));
}

TEST_CASE("error paths") {
  const auto op = heat_operator(1);
  SolutionField u = constant_field(1.0, 1);
  CHECK_THROWS(apply_operator(op, u, SpaceTimePoint{Vec{0.0, 0.0}, 0.0}));  // dimension mismatch
  CHECK_THROWS(verify_hypotheses(op, {}, {}));
}
