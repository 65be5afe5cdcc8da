#pragma once

#include <array>
#include <string>

#include "cubeval/geometry.hpp"

namespace cubeval {

/// Shared decode context for a prediction / ground-truth pair.
struct DecodeContext {
  Roi2D roi;
  Intrinsics intrinsics;
  const CategoryPriors* priors = nullptr;
  std::string category;
};

enum class LossGroup { uv, z, whl, pose };

/// Symmetric chamfer distance over two 8-corner sets: mean nearest-neighbor
/// Euclidean distance in each direction, summed. Order-free; cuboid
/// symmetries (pi rotations about principal axes) map a corner set to
/// itself and cost nothing.
double chamfer_corners(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b);

/// Elementwise L1 over the ordered 8x3 corner arrays (sum, not mean).
double corner_l1(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b);

/// Disentangled corner loss for one variable group: a pseudo box is decoded
/// with the group's factor taken from `pred` and every other factor from
/// `gt`, then compared against the gt box (L1 for uv/z/whl, chamfer for
/// pose). The rotation anchor ray always comes from the gt (u, v) so the
/// center and rotation groups stay decoupled; by construction the loss is
/// exactly invariant to pred variables outside the group.
double disentangled_loss(LossGroup group, const CubeParams& pred, const CubeParams& gt,
                         const DecodeContext& ctx);

/// Uncertainty-weighted aggregate over the five 3D terms:
/// sqrt(2) * exp(-mu) * (sum of parts) + mu.
double total_loss(double l_all, double l_uv, double l_z, double l_whl, double l_pose,
                  double mu);

struct LossBreakdown {
  double l_all = 0.0;
  double l_uv = 0.0;
  double l_z = 0.0;
  double l_whl = 0.0;
  double l_pose = 0.0;
  double mu = 0.0;
  double total = 0.0;
};

/// Entangled chamfer loss plus all four disentangled terms and the
/// mu-weighted total, with mu taken from `pred`.
LossBreakdown loss_breakdown(const CubeParams& pred, const CubeParams& gt,
                             const DecodeContext& ctx);

}  // namespace cubeval
