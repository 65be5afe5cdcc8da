#pragma once

#include <array>
#include <map>
#include <string>

#include "cubeval/camera.hpp"
#include "cubeval/types.hpp"

namespace cubeval {

inline constexpr double kRotationTol = 1e-9;   // orthonormality check at construction
inline constexpr double kRot6dEps = 1e-12;     // degenerate 6D input threshold
inline constexpr double kLogDimClamp = 10.0;   // |log-dim| beyond this is clamped

/// Oriented 3D box: center (meters), dims (w, h, l) = extents along the
/// object-local x, y, z axes, and an object-to-camera rotation.
class Cuboid {
 public:
  /// Unit cube at the origin.
  Cuboid() : center_(Vec3::Zero()), dims_(Vec3::Ones()), rotation_(Mat3::Identity()) {}

  Cuboid(const Vec3& center, const Vec3& dims, const Mat3& rotation);

  const Vec3& center() const { return center_; }
  const Vec3& dims() const { return dims_; }
  const Mat3& rotation() const { return rotation_; }
  double volume() const { return dims_.x() * dims_.y() * dims_.z(); }

  /// The 8 world-space corners R * diag(dims) * B_unit + center. B_unit
  /// corner k has sign bits (k&1, k&2, k&4) over (x, y, z): x varies
  /// fastest, bit 0 means -1/2 and bit 1 means +1/2.
  std::array<Vec3, 8> corners() const;

 private:
  Vec3 center_;
  Vec3 dims_;
  Mat3 rotation_;
};

/// Continuous 6D rotation parameterization: two stacked 3-vectors.
struct Rot6D {
  Vec6 p = (Vec6() << 1, 0, 0, 0, 1, 0).finished();
};

/// 2D box in pixels, top-left corner plus size.
struct Roi2D {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  void validate() const;
};

/// The 13-parameter cuboid prediction. (u, v) are normalized offsets inside
/// the RoI measured from its top-left corner, so (0.5, 0.5) is the RoI
/// center. z is metric depth in meters (convert virtual depth first, see
/// camera.hpp). w_bar/h_bar/l_bar are log ratios against category priors.
struct CubeParams {
  double u = 0.5;
  double v = 0.5;
  double z = 0.0;
  double w_bar = 0.0;
  double h_bar = 0.0;
  double l_bar = 0.0;
  Rot6D pose;
  double mu = 0.0;
};

/// Per-category mean dimensions (w0, h0, l0) in meters.
struct CategoryPriors {
  std::map<std::string, Vec3> mean_dims;

  const Vec3& at(const std::string& category) const;
};

/// Gram-Schmidt map from the 6D parameterization to a rotation matrix:
/// r1 = norm(p1), r2 = norm(p2 - (r1.p2) r1), r3 = r1 x r2, assembled as
/// columns. Throws Error(degenerate_rotation) when ||p1|| or ||p1 x p2||
/// falls below kRot6dEps.
Mat3 rot6d_to_matrix(const Rot6D& p);

/// Inverse embedding: the first two columns of R.
Rot6D matrix_to_rot6d(const Mat3& r);

/// Alignment matrix M for the camera ray through pixel (u_px, v_px):
/// o = norm(((u-px)/fx, (v-py)/fy, 1)), M rotates the principal axis
/// a = (0,0,1) onto o (axis norm(a x o), angle acos(o.a)). Egocentric
/// rotation is M * R_allocentric. When o is parallel to a the angle
/// vanishes and M = I.
Mat3 allocentric_to_egocentric(const Mat3& r_allo, double u_px, double v_px, const Intrinsics& k);
Mat3 egocentric_to_allocentric(const Mat3& r_ego, double u_px, double v_px, const Intrinsics& k);

struct DecodeFlags {
  bool dims_clamped = false;  // some log-dim fell outside [-kLogDimClamp, kLogDimClamp]
};

/// Full decode of the 13-parameter prediction into a world-space cuboid:
/// pixel center (rx + u*rw, ry + v*rh), back-projected at depth z; dims
/// exp(bar)*prior; rotation allocentric_to_egocentric(rot6d_to_matrix(p)).
/// Throws Error(non_positive_depth) when z <= 0 and propagates
/// degenerate-rotation errors. Log-dims are clamped to +-kLogDimClamp and
/// the clamp is reported through `flags`.
Cuboid decode_cuboid(const CubeParams& params, const Roi2D& roi, const Intrinsics& k,
                     const CategoryPriors& priors, const std::string& category,
                     DecodeFlags* flags = nullptr);

/// Final detection confidence sqrt(s * exp(-mu)); s in [0, 1].
double score_fusion(double score, double mu);

}  // namespace cubeval
