#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cubeval/losses.hpp"
#include "cubeval/sampling.hpp"

using namespace cubeval;

namespace {

DecodeContext make_ctx(const CategoryPriors& priors) {
  DecodeContext ctx;
  ctx.roi = {270.0, 190.0, 100.0, 100.0};
  ctx.intrinsics.fx = 500;
  ctx.intrinsics.fy = 500;
  ctx.intrinsics.px = 320;
  ctx.intrinsics.py = 240;
  ctx.intrinsics.height = 480;
  ctx.intrinsics.width = 640;
  ctx.priors = &priors;
  ctx.category = "chair";
  return ctx;
}

Mat3 principal_pi_rotation(int axis) {
  Mat3 r = -Mat3::Identity();
  r(axis, axis) = 1.0;
  return r;  // pi about the given axis
}

}  // namespace

TEST_CASE("chamfer is zero for equal and reordered corner sets") {
  const Cuboid c(Vec3(1, 2, 8), Vec3(1.2, 0.9, 2.3), Mat3::Identity());
  const auto corners = c.corners();
  CHECK(chamfer_corners(corners, corners) == 0.0);

  auto reversed = corners;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(chamfer_corners(corners, reversed) == 0.0);
}

TEST_CASE("chamfer absorbs pi rotations about any principal axis") {
  SplitMix64 rng(3);
  for (int axis = 0; axis < 3; ++axis) {
    const Cuboid c = random_cuboid(rng, Vec3(-5, -5, -5), Vec3(5, 5, 5), 0.4, 3.0);
    const Cuboid flipped(c.center(), c.dims(), c.rotation() * principal_pi_rotation(axis));
    CHECK(chamfer_corners(c.corners(), flipped.corners()) < 1e-12);
  }
}

TEST_CASE("chamfer symmetry and positivity") {
  SplitMix64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Cuboid a = random_cuboid(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3), 0.4, 3.0);
    const Cuboid b = random_cuboid(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3), 0.4, 3.0);
    const double ab = chamfer_corners(a.corners(), b.corners());
    CHECK(ab == chamfer_corners(b.corners(), a.corners()));
    CHECK(ab >= 0.0);
  }
  // zero iff the corner sets coincide
  const Cuboid a(Vec3::Zero(), Vec3::Ones(), Mat3::Identity());
  const Cuboid shifted(Vec3(1e-3, 0, 0), Vec3::Ones(), Mat3::Identity());
  CHECK(chamfer_corners(a.corners(), shifted.corners()) > 1e-4);
}

TEST_CASE("disentangled losses vanish when the group matches gt") {
  CategoryPriors priors;
  priors.mean_dims["chair"] = Vec3(0.9, 1.1, 0.8);
  const DecodeContext ctx = make_ctx(priors);

  CubeParams gt;
  gt.u = 0.45;
  gt.v = 0.62;
  gt.z = 7.5;
  gt.w_bar = 0.1;
  gt.h_bar = -0.2;
  gt.l_bar = 0.05;
  gt.pose.p << 0.8, 0.2, -0.1, 0.1, 0.9, 0.3;

  // pred differs everywhere; each group loss only sees its own variables
  CubeParams pred = gt;
  pred.u = 0.9;
  pred.v = 0.1;
  pred.z = 12.0;
  pred.w_bar = 0.4;
  pred.h_bar = 0.4;
  pred.l_bar = 0.4;
  pred.pose.p << 0.1, 0.7, 0.3, -0.5, 0.2, 0.8;

  for (const LossGroup group : {LossGroup::uv, LossGroup::z, LossGroup::whl, LossGroup::pose}) {
    CubeParams exact = pred;
    switch (group) {
      case LossGroup::uv:
        exact.u = gt.u;
        exact.v = gt.v;
        break;
      case LossGroup::z:
        exact.z = gt.z;
        break;
      case LossGroup::whl:
        exact.w_bar = gt.w_bar;
        exact.h_bar = gt.h_bar;
        exact.l_bar = gt.l_bar;
        break;
      case LossGroup::pose:
        exact.pose = gt.pose;
        break;
    }
    CHECK(disentangled_loss(group, exact, gt, ctx) < 1e-12);
  }
}

TEST_CASE("disentangled losses ignore out-of-group perturbations exactly") {
  CategoryPriors priors;
  priors.mean_dims["chair"] = Vec3(0.9, 1.1, 0.8);
  const DecodeContext ctx = make_ctx(priors);

  CubeParams gt;
  gt.u = 0.5;
  gt.v = 0.5;
  gt.z = 6.0;
  gt.pose.p << 1, 0, 0, 0, 1, 0;

  CubeParams pred = gt;
  pred.z = 9.0;

  const double base = disentangled_loss(LossGroup::z, pred, gt, ctx);
  CubeParams noisy = pred;
  noisy.u = 0.9;
  noisy.w_bar = 2.0;
  noisy.pose.p << 0.3, 0.4, 0.5, -0.2, 0.9, 0.1;
  CHECK(disentangled_loss(LossGroup::z, noisy, gt, ctx) == base);
}

TEST_CASE("uv group loss is a pure corner translation") {
  // gt cube at (0, 0, 5); pred moves the pixel center so the decoded center
  // lands at (0.1, 0, 5): L1 over corners = 8 * 0.1 = 0.8 (sum convention).
  CategoryPriors priors;
  priors.mean_dims["chair"] = Vec3(1, 1, 1);
  DecodeContext ctx = make_ctx(priors);

  CubeParams gt;
  gt.u = 0.5;  // pixel (320, 240) = principal point
  gt.v = 0.5;
  gt.z = 5.0;

  CubeParams pred = gt;
  // pixel offset of 0.1 * fx / z = 10 px -> u offset 10/100
  pred.u = gt.u + 0.1;

  CHECK(disentangled_loss(LossGroup::uv, pred, gt, ctx) ==
        doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("z group loss equals the substituted-depth translation") {
  CategoryPriors priors;
  priors.mean_dims["chair"] = Vec3(1, 1, 1);
  DecodeContext ctx = make_ctx(priors);

  CubeParams gt;
  gt.u = 0.5;
  gt.v = 0.5;
  gt.z = 5.0;
  CubeParams pred = gt;
  pred.z = 5.5;
  // center stays on the principal ray, so the pseudo box translates by
  // (0, 0, 0.5): L1 = 8 * 0.5 = 4
  CHECK(disentangled_loss(LossGroup::z, pred, gt, ctx) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("total loss formula and penalty floor") {
  CHECK(total_loss(0, 0, 0, 0, 0, 0.0) == 0.0);
  CHECK(total_loss(0, 0, 0, 0, 0, 3.0) == 3.0);
  const double sqrt2 = std::sqrt(2.0);
  CHECK(total_loss(1, 2, 3, 4, 5, 0.0) == doctest::Approx(sqrt2 * 15.0).epsilon(1e-15));
  // monotone in each part
  CHECK(total_loss(2, 0, 0, 0, 0, 0.7) > total_loss(1, 0, 0, 0, 0, 0.7));
}

TEST_CASE("total loss mu-argmin matches the closed form") {
  // d/dmu [sqrt(2) e^-mu L + mu] = 0  =>  mu* = ln(sqrt(2) L), total = mu* + 1.
  const double parts[5] = {0.5, 0.25, 1.0, 0.375, 0.25};  // L = 2.375
  const double L = 2.375;
  const double mu_star = std::log(std::sqrt(2.0) * L);
  CHECK(mu_star == doctest::Approx(1.2115710277665772).epsilon(1e-15));

  auto f = [&](double mu) {
    return total_loss(parts[0], parts[1], parts[2], parts[3], parts[4], mu);
  };
  CHECK(f(mu_star) == doctest::Approx(mu_star + 1.0).epsilon(1e-12));

  // golden-section scan over [-5, 5]
  double lo = -5.0, hi = 5.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  while (hi - lo > 1e-10) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    if (f(m1) < f(m2))
      hi = m2;
    else
      lo = m1;
  }
  CHECK(0.5 * (lo + hi) == doctest::Approx(mu_star).epsilon(1e-6));

  // convexity in mu (midpoint test along the scan range)
  SplitMix64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(-4, 4), b = rng.uniform(-4, 4);
    CHECK(f(0.5 * (a + b)) <= 0.5 * (f(a) + f(b)) + 1e-12);
  }
}

TEST_CASE("loss breakdown ties the pieces together") {
  CategoryPriors priors;
  priors.mean_dims["chair"] = Vec3(0.9, 1.1, 0.8);
  const DecodeContext ctx = make_ctx(priors);

  CubeParams gt;
  gt.u = 0.45;
  gt.v = 0.55;
  gt.z = 7.0;
  gt.pose.p << 0.9, 0.1, 0.0, -0.1, 0.8, 0.2;

  CubeParams pred = gt;
  pred.u = 0.5;
  pred.z = 7.4;
  pred.w_bar = 0.15;
  pred.mu = 0.3;

  const LossBreakdown bd = loss_breakdown(pred, gt, ctx);
  CHECK(bd.l_all >= 0.0);
  CHECK(bd.l_uv > 0.0);
  CHECK(bd.l_z > 0.0);
  CHECK(bd.l_whl > 0.0);
  CHECK(bd.l_pose < 1e-12);
  CHECK(bd.mu == 0.3);
  CHECK(bd.total ==
        doctest::Approx(total_loss(bd.l_all, bd.l_uv, bd.l_z, bd.l_whl, bd.l_pose, bd.mu))
            .epsilon(1e-15));

  // pred == gt: everything vanishes except the mu floor
  CubeParams exact = gt;
  exact.mu = 0.5;
  const LossBreakdown zero = loss_breakdown(exact, gt, ctx);
  CHECK(zero.l_all < 1e-12);
  CHECK(zero.l_uv < 1e-12);
  CHECK(zero.l_z < 1e-12);
  CHECK(zero.l_whl < 1e-12);
  CHECK(zero.l_pose < 1e-12);
  CHECK(zero.total == doctest::Approx(0.5).epsilon(1e-9));
}
