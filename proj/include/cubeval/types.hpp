#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace cubeval {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Single exception type for the whole library; `kind` maps 1:1 onto the
/// C API status codes and the CLI exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    invalid_argument,
    schema,
    referential,
    geometry,
    degenerate_rotation,
    non_positive_depth,
    behind_camera,
    insufficient_data,
    io,
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

[[noreturn]] inline void fail(Error::Kind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace cubeval
