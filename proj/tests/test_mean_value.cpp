#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pmvf/mean_value.hpp"
#include "test_support.hpp"

using namespace pmvf;
using testkit::caloric_poly;
using testkit::constant_field;
using testkit::heat_operator;
using testkit::kPi;

namespace {

const SpaceTimePoint kOrigin{Vec{0.0}, 0.0};

MeanValueConfig test_cfg() {
  MeanValueConfig cfg;
  cfg.sphere_resolution = 380;
  cfg.rho_nodes = 40;
  cfg.quad.time_slabs = 140;
  return cfg;
}

SolutionField gaussian_translate(const SpaceTimePoint& pole) {
  SolutionField u;
  u.name = "gaussian_translate";
  auto spec = std::make_shared<GaussianKernelSpec>(Mat::identity(pole.dim()));
  u.value = [spec, pole](const SpaceTimePoint& z) { return spec->value(z, pole); };
  u.grad = [spec, pole](const SpaceTimePoint& z) { return spec->grad_x(z, pole); };
  u.hess = [spec, pole](const SpaceTimePoint& z) { return spec->hess_x(z, pole); };
  u.dt = [spec, pole](const SpaceTimePoint& z) { return spec->dt(z, pole); };
  return u;
}

}  // namespace

TEST_CASE("kernel closed forms, heat N=1") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const auto op = heat_operator(1);
  KernelEvaluator ev(field, op);
  SUBCASE("M = (x0 - x)^2 / (4 (t0 - t)^2)") {
    for (double x : {-0.4, 0.1, 0.6})
      for (double gap : {0.02, 0.1, 0.4}) {
        const SpaceTimePoint z{Vec{x}, -gap};
        CHECK(ev.kernel_M(z) == doctest::Approx(x * x / (4.0 * gap * gap)).epsilon(1e-12));
      }
  }
  SUBCASE("x = x0: spatial gradient vanishes, M = 0 and K = 0") {
    const SpaceTimePoint z{Vec{0.0}, -0.1};
    CHECK(ev.kernel_M(z) == doctest::Approx(0.0));
    CHECK(ev.kernel_K(z) == doctest::Approx(0.0));
  }
  SUBCASE("K is dominated by the spatial-gradient bound") {
    for (double x : {-0.3, 0.2, 0.5})
      for (double gap : {0.05, 0.2}) {
        const SpaceTimePoint z{Vec{x}, -gap};
        const Vec g = field.grad_x(z);
        CHECK(ev.kernel_K(z) <= quad_form(op.a(z), g) / g.norm() + 1e-15);
        CHECK(ev.kernel_K(z) <= op.Lambda * g.norm() + 1e-15);
      }
  }
  SUBCASE("kernels are nonnegative") {
    for (double x : {-0.5, 0.0, 0.3})
      for (double gap : {0.01, 0.2, 0.6}) {
        const SpaceTimePoint z{Vec{x}, -gap};
        CHECK(ev.kernel_K(z) >= 0.0);
        CHECK(ev.kernel_M(z) >= 0.0);
      }
  }
}

TEST_CASE("extended kernels") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const auto op = heat_operator(1);
  KernelEvaluator ev(field, op);
  const int m = 3;
  const double r = 1.0;
  SUBCASE("N_r = 0 on the boundary of the extended ball makes M and W vanish") {
    const double gap = 0.01;
    const double arg0 = (1 + m) * std::log(r) - 0.5 * (1 + m) * std::log(4.0 * kPi * gap);
    const double x_boundary = 2.0 * std::sqrt(gap * arg0);
    const auto near = ev.kernel_extended({Vec{x_boundary * (1.0 - 1e-10)}, -gap}, r, m);
    CHECK(near.n_r < 1e-4);
    CHECK(std::abs(near.m_rm) < 1e-12);
    CHECK(std::abs(near.w_rm) < 1e-7);
    CHECK_THROWS_AS(ev.kernel_extended({Vec{x_boundary * 1.01}, -gap}, r, m), std::domain_error);
  }
  SUBCASE("omega_3 = 4 pi / 3 enters the m = 3 kernels") {
    const SpaceTimePoint z{Vec{0.1}, -0.02};
    const auto k = ev.kernel_extended(z, r, 3);
    const double gap = 0.02;
    const double arg = 4.0 * std::log(r) + field.log_value(z) - 1.5 * std::log(4.0 * kPi * gap);
    const double n_r = 2.0 * std::sqrt(gap) * std::sqrt(arg);
    CHECK(k.n_r == doctest::Approx(n_r).epsilon(1e-12));
    const double omega3 = 4.0 * kPi / 3.0;
    const double m_expected = omega3 * std::pow(n_r, 3) * (ev.kernel_M(z) + 0.6 * n_r * n_r / (4.0 * gap * gap));
    CHECK(k.m_rm == doctest::Approx(m_expected).epsilon(1e-12));
  }
  SUBCASE("boundedness scan: sup M_r^{(3)} finite and stable under refinement") {
    const double sup_coarse = extended_kernel_sup(ev, r, 3, 150);
    const double sup_fine = extended_kernel_sup(ev, r, 3, 300);
    CHECK(sup_fine > 0.0);
    CHECK(std::abs(sup_fine - sup_coarse) <= 0.05 * sup_fine);
  }
}

TEST_CASE("surface mean value formula") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const auto op = heat_operator(1);
  KernelEvaluator ev(field, op);
  const auto cfg = test_cfg();
  SUBCASE("u = 1: the K-mass carries the whole identity") {
    const auto one = constant_field(1.0, 1);
    const auto rep = surface_mean_value(one, nullptr, op, ev, 1.0, cfg);
    CHECK(rep.kernel_term == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(rep.f_term == 0.0);
    CHECK(rep.drift_term == 0.0);
    CHECK(std::abs(rep.residual) < 1e-3);
  }
  SUBCASE("caloric polynomial") {
    const auto u = caloric_poly(1, 0);
    const auto rep = surface_mean_value(u, nullptr, op, ev, 1.0, cfg);
    CHECK(std::abs(rep.residual) <= 1e-3 * std::max(1.0, std::abs(rep.u0)));
  }
  SUBCASE("zero-order term: u = 1, c = -1, f = -1") {
    auto opc = heat_operator(1);
    opc.c = [](const SpaceTimePoint&) { return -1.0; };
    ConstantGammaField f2(Mat::identity(1), Vec(1), -1.0, kOrigin);
    KernelEvaluator ev2(f2, opc);
    const auto one = constant_field(1.0, 1);
    auto f_minus = constant_field(-1.0, 1);
    const auto rep = surface_mean_value(one, &f_minus, opc, ev2, 1.0, cfg);
    CHECK(rep.u0 == 1.0);
    CHECK(std::abs(rep.residual) < 1e-3);
    CHECK(rep.drift_term > 0.0);  // (div b - c) u = +1 on the ball
    CHECK(rep.f_term > 0.0);      // f < 0 against the negative weight
  }
}

TEST_CASE("volume mean value formula") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const auto op = heat_operator(1);
  KernelEvaluator ev(field, op);
  const auto cfg = test_cfg();
  SUBCASE("u = 1 normalization") {
    const auto one = constant_field(1.0, 1);
    for (double r : {0.5, 1.0}) {
      const auto rep = volume_mean_value(one, nullptr, op, ev, r, cfg);
      CHECK(rep.kernel_term == doctest::Approx(1.0).epsilon(1e-3));
      CHECK(std::abs(rep.residual) < 1e-3);
    }
  }
  SUBCASE("caloric polynomial") {
    const auto u = caloric_poly(1, 0);
    const auto rep = volume_mean_value(u, nullptr, op, ev, 1.0, cfg);
    CHECK(std::abs(rep.residual) <= 1e-3 * std::max(1.0, std::abs(rep.u0)));
  }
  SUBCASE("positive caloric Gaussian translate") {
    const auto u = gaussian_translate({Vec{0.0}, -1.0});
    const auto rep = volume_mean_value(u, nullptr, op, ev, 0.5, cfg);
    CHECK(rep.u0 > 0.0);
    CHECK(std::abs(rep.residual) <= 1e-3 * std::max(1.0, std::abs(rep.u0)));
  }
  SUBCASE("residual decays under grid refinement") {
    const auto u = caloric_poly(1, 0);
    MeanValueConfig coarse = test_cfg();
    coarse.quad.time_slabs = 40;
    coarse.quad.eps_k_max = 12;
    coarse.quad.slice_simpson = 9;
    coarse.quad.slice_scan = 48;
    MeanValueConfig fine = coarse;
    fine.quad.time_slabs = 80;
    fine.quad.eps_k_max = 18;
    fine.quad.slice_simpson = 17;
    fine.quad.slice_scan = 96;
    const auto rc = volume_mean_value(u, nullptr, op, ev, 1.0, coarse);
    const auto rf = volume_mean_value(u, nullptr, op, ev, 1.0, fine);
    CHECK(std::abs(rf.residual) <= std::abs(rc.residual));
  }
  SUBCASE("zero-order term exercises the rho-chain") {
    auto opc = heat_operator(1);
    opc.c = [](const SpaceTimePoint&) { return -1.0; };
    ConstantGammaField f2(Mat::identity(1), Vec(1), -1.0, kOrigin);
    KernelEvaluator ev2(f2, opc);
    const auto one = constant_field(1.0, 1);
    auto f_minus = constant_field(-1.0, 1);
    const auto rep = volume_mean_value(one, &f_minus, opc, ev2, 0.8, cfg);
    CHECK(std::abs(rep.residual) < 2e-3);
  }
}

TEST_CASE("extended mean value formula, m = 3") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const auto op = heat_operator(1);
  KernelEvaluator ev(field, op);
  const auto cfg = test_cfg();
  SUBCASE("u = 1 normalization") {
    const auto one = constant_field(1.0, 1);
    const auto rep = extended_mean_value(one, nullptr, op, ev, 1.0, 3, cfg);
    CHECK(rep.kernel_term == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(rep.residual) < 1e-3);
  }
  SUBCASE("caloric polynomial and agreement with the plain volume formula") {
    const auto u = caloric_poly(1, 0);
    const auto ext = extended_mean_value(u, nullptr, op, ev, 1.0, 3, cfg);
    CHECK(std::abs(ext.residual) <= 1e-3 * std::max(1.0, std::abs(ext.u0)));
    const auto vol = volume_mean_value(u, nullptr, op, ev, 1.0, cfg);
    CHECK(std::abs(ext.kernel_term - vol.kernel_term) <= 2e-3 * std::max(1.0, std::abs(ext.u0)));
  }
  SUBCASE("guards") { CHECK_THROWS(extended_mean_value(constant_field(1.0, 1), nullptr, op, ev, 1.0, 0, cfg)); }
}

TEST_CASE("max-principle sign structure of the volume deficit") {
  ConstantGammaField field(Mat::identity(1), kOrigin);
  const auto op = heat_operator(1);
  KernelEvaluator ev(field, op);
  // u <= u(z0) with equality at z0 forces a nonpositive M-weighted deficit.
  SolutionField u;
  u.value = [](const SpaceTimePoint& z) { return -z.x[0] * z.x[0]; };
  const double u0 = u.value(kOrigin);
  QuadratureConfig qc;
  const auto res = volume_integral(make_ball_region(field, 0.8, 0),
                                   [&](const SpaceTimePoint& z) { return ev.kernel_M(z) * (u.value(z) - u0); }, qc);
  CHECK(res.value < 0.0);
}
