#include "cubeval/losses.hpp"

#include <cmath>
#include <limits>

namespace cubeval {

double chamfer_corners(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b) {
  auto directed = [](const std::array<Vec3, 8>& from, const std::array<Vec3, 8>& to) {
    double sum = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) best = std::min(best, (p - q).norm());
      sum += best;
    }
    return sum / 8.0;
  };
  return directed(a, b) + directed(b, a);
}

double corner_l1(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b) {
  double sum = 0.0;
  for (int k = 0; k < 8; ++k) sum += (a[k] - b[k]).cwiseAbs().sum();
  return sum;
}

namespace {

struct DecodedFactors {
  Vec3 center;
  Vec3 dims;
  Mat3 rotation;
};

// Decodes the raw parameter groups separately so the disentangled pseudo
// boxes can swap one factor at a time. The rotation anchor ray is the gt
// projected-center pixel, supplied by the caller. Log-dims clamp exactly as
// in decode_cuboid.
DecodedFactors decode_factors(const CubeParams& params, const DecodeContext& ctx,
                              double anchor_x, double anchor_y) {
  if (!(params.z > 0.0)) fail(Error::Kind::non_positive_depth, "decoded depth must be positive");
  const double cx = ctx.roi.x + params.u * ctx.roi.w;
  const double cy = ctx.roi.y + params.v * ctx.roi.h;
  const Vec3& prior = ctx.priors->at(ctx.category);
  auto scale = [](double bar) { return std::exp(std::clamp(bar, -kLogDimClamp, kLogDimClamp)); };
  DecodedFactors out;
  out.center = backproject(cx, cy, params.z, ctx.intrinsics);
  out.dims = Vec3(scale(params.w_bar) * prior.x(), scale(params.h_bar) * prior.y(),
                  scale(params.l_bar) * prior.z());
  out.rotation =
      allocentric_to_egocentric(rot6d_to_matrix(params.pose), anchor_x, anchor_y, ctx.intrinsics);
  return out;
}

std::array<Vec3, 8> factor_corners(const DecodedFactors& f) {
  return Cuboid(f.center, f.dims, f.rotation).corners();
}

}  // namespace

double disentangled_loss(LossGroup group, const CubeParams& pred, const CubeParams& gt,
                         const DecodeContext& ctx) {
  if (ctx.priors == nullptr) fail(Error::Kind::invalid_argument, "decode context has no priors");
  ctx.roi.validate();
  ctx.intrinsics.validate();

  const double gt_px = ctx.roi.x + gt.u * ctx.roi.w;
  const double gt_py = ctx.roi.y + gt.v * ctx.roi.h;
  const DecodedFactors gt_f = decode_factors(gt, ctx, gt_px, gt_py);

  DecodedFactors pseudo = gt_f;
  switch (group) {
    case LossGroup::uv: {
      CubeParams mixed = gt;
      mixed.u = pred.u;
      mixed.v = pred.v;
      pseudo.center = decode_factors(mixed, ctx, gt_px, gt_py).center;
      break;
    }
    case LossGroup::z: {
      CubeParams mixed = gt;
      mixed.z = pred.z;
      pseudo.center = decode_factors(mixed, ctx, gt_px, gt_py).center;
      break;
    }
    case LossGroup::whl: {
      CubeParams mixed = gt;
      mixed.w_bar = pred.w_bar;
      mixed.h_bar = pred.h_bar;
      mixed.l_bar = pred.l_bar;
      pseudo.dims = decode_factors(mixed, ctx, gt_px, gt_py).dims;
      break;
    }
    case LossGroup::pose: {
      CubeParams mixed = gt;
      mixed.pose = pred.pose;
      pseudo.rotation = decode_factors(mixed, ctx, gt_px, gt_py).rotation;
      break;
    }
  }

  const auto gt_corners = factor_corners(gt_f);
  const auto pseudo_corners = factor_corners(pseudo);
  if (group == LossGroup::pose) return chamfer_corners(pseudo_corners, gt_corners);
  return corner_l1(pseudo_corners, gt_corners);
}

double total_loss(double l_all, double l_uv, double l_z, double l_whl, double l_pose,
                  double mu) {
  constexpr double sqrt2 = 1.4142135623730950488;
  return sqrt2 * std::exp(-mu) * (l_all + l_uv + l_z + l_whl + l_pose) + mu;
}

LossBreakdown loss_breakdown(const CubeParams& pred, const CubeParams& gt,
                             const DecodeContext& ctx) {
  if (ctx.priors == nullptr) fail(Error::Kind::invalid_argument, "decode context has no priors");
  LossBreakdown out;
  const Cuboid pred_box = decode_cuboid(pred, ctx.roi, ctx.intrinsics, *ctx.priors, ctx.category);
  const Cuboid gt_box = decode_cuboid(gt, ctx.roi, ctx.intrinsics, *ctx.priors, ctx.category);
  out.l_all = chamfer_corners(pred_box.corners(), gt_box.corners());
  out.l_uv = disentangled_loss(LossGroup::uv, pred, gt, ctx);
  out.l_z = disentangled_loss(LossGroup::z, pred, gt, ctx);
  out.l_whl = disentangled_loss(LossGroup::whl, pred, gt, ctx);
  out.l_pose = disentangled_loss(LossGroup::pose, pred, gt, ctx);
  out.mu = pred.mu;
  out.total = total_loss(out.l_all, out.l_uv, out.l_z, out.l_whl, out.l_pose, pred.mu);
  return out;
}

}  // namespace cubeval
