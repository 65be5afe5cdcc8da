#include "cubeval/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace cubeval {

namespace {

void check_rotation(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = r.determinant();
  if (ortho > kRotationTol || std::abs(det - 1.0) > kRotationTol)
    fail(Error::Kind::geometry, "rotation matrix is not orthonormal with det +1");
}

}  // namespace

Cuboid::Cuboid(const Vec3& center, const Vec3& dims, const Mat3& rotation)
    : center_(center), dims_(dims), rotation_(rotation) {
  if (!(dims.minCoeff() > 0.0)) fail(Error::Kind::invalid_argument, "cuboid dims must be positive");
  check_rotation(rotation);
}

std::array<Vec3, 8> Cuboid::corners() const {
  std::array<Vec3, 8> out;
  for (int k = 0; k < 8; ++k) {
    const Vec3 unit((k & 1) ? 0.5 : -0.5, (k & 2) ? 0.5 : -0.5, (k & 4) ? 0.5 : -0.5);
    out[k] = rotation_ * dims_.cwiseProduct(unit) + center_;
  }
  return out;
}

void Roi2D::validate() const {
  if (!(w > 0.0) || !(h > 0.0)) fail(Error::Kind::invalid_argument, "RoI width and height must be positive");
}

const Vec3& CategoryPriors::at(const std::string& category) const {
  auto it = mean_dims.find(category);
  if (it == mean_dims.end()) fail(Error::Kind::invalid_argument, "no dimension priors for category '" + category + "'");
  if (!(it->second.minCoeff() > 0.0)) fail(Error::Kind::invalid_argument, "dimension priors must be positive");
  return it->second;
}

Mat3 rot6d_to_matrix(const Rot6D& p) {
  const Vec3 p1 = p.p.head<3>();
  const Vec3 p2 = p.p.tail<3>();
  if (p1.norm() <= kRot6dEps || p1.cross(p2).norm() <= kRot6dEps)
    fail(Error::Kind::degenerate_rotation, "degenerate 6D rotation parameters");
  const Vec3 r1 = p1.normalized();
  const Vec3 r2 = (p2 - r1.dot(p2) * r1).normalized();
  const Vec3 r3 = r1.cross(r2);
  Mat3 r;
  r.col(0) = r1;
  r.col(1) = r2;
  r.col(2) = r3;
  return r;
}

Rot6D matrix_to_rot6d(const Mat3& r) {
  Rot6D out;
  out.p.head<3>() = r.col(0);
  out.p.tail<3>() = r.col(1);
  return out;
}

namespace {

/// Rotation taking the principal axis (0,0,1) onto the unit ray through
/// pixel (u, v). Identity when the ray is the principal axis itself.
Mat3 ray_alignment(double u_px, double v_px, const Intrinsics& k) {
  const Vec3 ray = Vec3((u_px - k.px) / k.fx, (v_px - k.py) / k.fy, 1.0).normalized();
  const Vec3 principal(0.0, 0.0, 1.0);
  const Vec3 axis = principal.cross(ray);
  const double axis_norm = axis.norm();
  if (axis_norm <= 1e-15) return Mat3::Identity();  // ray parallel to the axis
  const double angle = std::acos(std::clamp(ray.dot(principal), -1.0, 1.0));
  return Eigen::AngleAxisd(angle, axis / axis_norm).toRotationMatrix();
}

}  // namespace

Mat3 allocentric_to_egocentric(const Mat3& r_allo, double u_px, double v_px, const Intrinsics& k) {
  k.validate();
  return ray_alignment(u_px, v_px, k) * r_allo;
}

Mat3 egocentric_to_allocentric(const Mat3& r_ego, double u_px, double v_px, const Intrinsics& k) {
  k.validate();
  return ray_alignment(u_px, v_px, k).transpose() * r_ego;
}

Cuboid decode_cuboid(const CubeParams& params, const Roi2D& roi, const Intrinsics& k,
                     const CategoryPriors& priors, const std::string& category,
                     DecodeFlags* flags) {
  roi.validate();
  k.validate();
  if (!(params.z > 0.0)) fail(Error::Kind::non_positive_depth, "decoded depth must be positive");

  const double cx = roi.x + params.u * roi.w;
  const double cy = roi.y + params.v * roi.h;
  const Vec3 center = backproject(cx, cy, params.z, k);

  const Vec3& prior = priors.at(category);
  bool clamped = false;
  auto scale = [&clamped](double bar) {
    if (std::abs(bar) > kLogDimClamp) {
      clamped = true;
      bar = std::clamp(bar, -kLogDimClamp, kLogDimClamp);
    }
    return std::exp(bar);
  };
  const Vec3 dims(scale(params.w_bar) * prior.x(), scale(params.h_bar) * prior.y(),
                  scale(params.l_bar) * prior.z());
  if (flags) flags->dims_clamped = clamped;

  const Mat3 rotation = allocentric_to_egocentric(rot6d_to_matrix(params.pose), cx, cy, k);
  return Cuboid(center, dims, rotation);
}

double score_fusion(double score, double mu) {
  return std::sqrt(score * std::exp(-mu));
}

}  // namespace cubeval
