#include "cubeval/camera.hpp"

namespace cubeval {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) fail(Error::Kind::invalid_argument, "focal lengths must be positive");
  if (!(height > 0.0) || !(width > 0.0)) fail(Error::Kind::invalid_argument, "image size must be positive");
}

Intrinsics Intrinsics::fallback(double height, double width) {
  if (!(height > 0.0) || !(width > 0.0)) fail(Error::Kind::invalid_argument, "image size must be positive");
  Intrinsics k;
  k.fx = k.fy = 2.0 * height;
  k.px = 0.5 * width;
  k.py = 0.5 * height;
  k.height = height;
  k.width = width;
  k.estimated = true;
  return k;
}

void VirtualCamera::validate() const {
  if (!(focal > 0.0) || !(height > 0.0)) fail(Error::Kind::invalid_argument, "virtual camera parameters must be positive");
}

double to_virtual_depth(double z, const Intrinsics& k, const VirtualCamera& v) {
  k.validate();
  v.validate();
  if (!(z > 0.0)) fail(Error::Kind::non_positive_depth, "depth must be positive");
  return z * (v.focal / k.fy) * (k.height / v.height);
}

double from_virtual_depth(double z_v, const Intrinsics& k, const VirtualCamera& v) {
  k.validate();
  v.validate();
  if (!(z_v > 0.0)) fail(Error::Kind::non_positive_depth, "depth must be positive");
  return z_v * (k.fy / v.focal) * (v.height / k.height);
}

Vec2 project(const Vec3& point, const Intrinsics& k) {
  k.validate();
  if (!(point.z() > 0.0)) fail(Error::Kind::behind_camera, "point is behind the camera");
  return {k.fx * point.x() / point.z() + k.px, k.fy * point.y() / point.z() + k.py};
}

Vec3 backproject(double x, double y, double z, const Intrinsics& k) {
  k.validate();
  if (!(z > 0.0)) fail(Error::Kind::non_positive_depth, "depth must be positive");
  return {z / k.fx * (x - k.px), z / k.fy * (y - k.py), z};
}

Intrinsics rescale(const Intrinsics& k, double s) {
  k.validate();
  if (!(s > 0.0)) fail(Error::Kind::invalid_argument, "scale factor must be positive");
  Intrinsics out = k;
  out.fx *= s;
  out.fy *= s;
  out.px *= s;
  out.py *= s;
  out.height *= s;
  out.width *= s;
  return out;
}

}  // namespace cubeval
