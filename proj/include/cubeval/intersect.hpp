#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cubeval/geometry.hpp"

namespace cubeval {

inline constexpr double kPlaneEps = 1e-9;     // inside a half-space up to this signed distance
inline constexpr double kCoplanarAngleEps = 1e-6;  // radians, face-dedup normal tolerance
inline constexpr double kFaceAreaEps = 1e-12;  // m^2, fragments below this are dropped
inline constexpr double kVolumeEps = 1e-12;    // m^3, intersection volumes below snap to 0

/// One triangle of the intersection boundary; `source` records which input
/// box (1 or 2) the fragment was clipped from.
struct TriFace {
  std::array<Vec3, 3> v;
  int source = 0;

  double area() const;
};

/// Convex intersection of two cuboids as a triangle soup plus its volume.
struct IntersectionShape {
  std::vector<TriFace> faces;
  double volume = 0.0;
};

/// The cuboid surface as 12 outward-wound triangles (2 per face); the
/// vertex set equals corners().
std::array<TriFace, 12> box_to_mesh(const Cuboid& c);

/// Clips each box's triangles against the other box's 6 half-spaces,
/// drops coplanar duplicates (box-1 fragments win), and integrates the
/// volume as signed tetrahedra against the fragment-vertex centroid.
/// Empty intersections give volume 0 and no faces.
IntersectionShape intersect_shape(const Cuboid& a, const Cuboid& b);

/// Exact IoU of two oriented cuboids in [0, 1]. Degenerate contact
/// (face/edge/point) counts as zero overlap.
double iou3d(const Cuboid& a, const Cuboid& b);

/// Legacy ground-plane approximation: top-view (XZ) footprint polygon
/// intersection times vertical (y) interval overlap, with the union built
/// from the same approximated volumes. Exact only for yaw-only boxes
/// sharing a vertical interval.
double iou3d_approx_groundplane(const Cuboid& a, const Cuboid& b);

/// Dense pairwise IoU results; row = prediction index, col = ground truth.
struct IoUMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

enum class IoUKernel { exact, groundplane };

/// All-pairs IoU. Entries are bit-identical to the serial scalar kernel
/// for every thread count; AABB pre-rejection only skips pairs whose exact
/// IoU is 0. threads == 0 picks hardware_concurrency.
IoUMatrix iou3d_batched(std::span<const Cuboid> preds, std::span<const Cuboid> gts,
                        int threads = 0, IoUKernel kernel = IoUKernel::exact);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t in_union = 0;
  std::uint64_t in_both = 0;
};

/// Rejection-sampling IoU oracle over the joint axis-aligned bounding box.
/// Deterministic for a fixed seed regardless of platform.
McEstimate mc_iou_oracle(const Cuboid& a, const Cuboid& b, std::uint64_t samples,
                         std::uint64_t seed);

}  // namespace cubeval
