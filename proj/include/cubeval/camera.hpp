#pragma once

#include "cubeval/types.hpp"

namespace cubeval {

/// Pinhole camera in pixels. Camera frame: +x right, +y down, +z into the
/// scene; depth is the z coordinate in meters.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double px = 0.0;
  double py = 0.0;
  double height = 0.0;
  double width = 0.0;
  bool estimated = false;  // true when built via the f = 2H fallback

  void validate() const;

  /// Fallback for images with unknown calibration: f = 2H, principal point
  /// at the image center. The result is flagged `estimated`.
  static Intrinsics fallback(double height, double width);
};

/// Reference camera for depth normalization. Both values default to 512.
struct VirtualCamera {
  double focal = 512.0;
  double height = 512.0;

  void validate() const;
};

/// z_v = z * (f_v / fy) * (H / H_v). The vertical focal length is used
/// because the underlying derivation is in image-height terms; with square
/// pixels the choice is immaterial.
double to_virtual_depth(double z, const Intrinsics& k, const VirtualCamera& v);
double from_virtual_depth(double z_v, const Intrinsics& k, const VirtualCamera& v);

/// Standard pinhole projection. Throws Error(behind_camera) when z <= 0.
Vec2 project(const Vec3& point, const Intrinsics& k);

/// Lifts pixel (x, y) at depth z back to the camera frame.
Vec3 backproject(double x, double y, double z, const Intrinsics& k);

/// Uniform image rescale: every field (focal lengths, principal point,
/// image size) multiplied by s. Virtual depth is invariant under this map.
Intrinsics rescale(const Intrinsics& k, double s);

}  // namespace cubeval
