#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace revo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Cov3 = Eigen::Matrix3d;

/// Failure categories raised by the library. The CLI maps them to exit codes.
enum class ErrorCode {
  Domain,
  ContractViolation,
  FewerThanThreePoints,
  RankDeficientGeometry,
  InsufficientExcitation,
  RankDeficient,
  FewerThanThreeRows,
  StaleSeed,
  OutOfDomain,
  SolverStalled,
  DataError,
  ConfigError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain: return "Domain";
    case ErrorCode::ContractViolation: return "ContractViolation";
    case ErrorCode::FewerThanThreePoints: return "FewerThanThreePoints";
    case ErrorCode::RankDeficientGeometry: return "RankDeficientGeometry";
    case ErrorCode::InsufficientExcitation: return "InsufficientExcitation";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::FewerThanThreeRows: return "FewerThanThreeRows";
    case ErrorCode::StaleSeed: return "StaleSeed";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::SolverStalled: return "SolverStalled";
    case ErrorCode::DataError: return "DataError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Nanoseconds since the stream epoch.
struct Timestamp {
  std::int64_t ns = 0;

  constexpr double seconds() const { return static_cast<double>(ns) * 1e-9; }
  static Timestamp from_seconds(double s) { return Timestamp{std::llround(s * 1e9)}; }

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

constexpr std::int64_t kNsPerMs = 1'000'000;
constexpr std::int64_t kNsPerSec = 1'000'000'000;

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

/// Unit quaternion rotation. Construction normalizes; a zero quaternion is rejected.
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}

  Rotation(double w, double x, double y, double z) : q_(w, x, y, z) { normalize(); }

  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) { normalize(); }

  static Rotation from_matrix(const Mat3& m) { return Rotation(Eigen::Quaterniond(m)); }

  static Rotation from_axis_angle(const Vec3& axis, double angle) {
    return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
  }

  /// Exponential map of a rotation vector.
  static Rotation exp(const Vec3& rotvec) {
    const double angle = rotvec.norm();
    if (angle < 1e-300) return Rotation();
    return from_axis_angle(rotvec / angle, angle);
  }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation operator*(const Rotation& o) const { return Rotation(q_ * o.q_); }
  Rotation inverse() const { return Rotation(q_.conjugate()); }

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

 private:
  void normalize() {
    const double n = q_.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::Domain, "rotation quaternion must be non-zero and finite");
    q_.coeffs() /= n;
  }

  Eigen::Quaterniond q_;
};

/// Rigid transform from the radar (body) frame to the event camera frame.
struct Extrinsics {
  Rotation rotation_radar_to_event;
  Vec3 lever_arm_radar_to_event = Vec3::Zero();  // radar frame, metres
};

/// Radar x-forward / y-left / z-up mounted next to a camera with z-forward / x-right / y-down.
inline Rotation forward_looking_camera_rotation() {
  Mat3 m;
  m << 0, -1, 0,
       0, 0, -1,
       1, 0, 0;
  return Rotation::from_matrix(m);
}

inline bool is_valid_covariance(const Mat3& c, double sym_tol = 1e-12, double eig_tol = 1e-12) {
  if (!c.allFinite()) return false;
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, c.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -eig_tol;
}

struct CameraIntrinsics {
  double fx = 250.0;
  double fy = 250.0;
  double cx = 173.0;
  double cy = 130.0;
  int width = 346;
  int height = 260;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::Domain, "focal lengths must be positive");
    if (width <= 0 || height <= 0) throw Error(ErrorCode::Domain, "image size must be positive");
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
      throw Error(ErrorCode::Domain, "principal point outside the image");
  }

  bool contains(const Vec2& u) const {
    return u.x() >= 0.0 && u.x() <= width - 1.0 && u.y() >= 0.0 && u.y() <= height - 1.0;
  }
};

/// Pinhole back-projection of a pixel onto the z = 1 plane.
inline Vec3 pixel_to_homogeneous(const Vec2& u, const CameraIntrinsics& intr) {
  if (!u.allFinite() || !intr.contains(u))
    throw Error(ErrorCode::Domain, "pixel outside image bounds");
  return Vec3((u.x() - intr.cx) / intr.fx, (u.y() - intr.cy) / intr.fy, 1.0);
}

inline Vec2 homogeneous_to_pixel(const Vec3& x, const CameraIntrinsics& intr) {
  return Vec2(intr.fx * x.x() / x.z() + intr.cx, intr.fy * x.y() / x.z() + intr.cy);
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace revo
