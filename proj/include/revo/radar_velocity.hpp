#pragma once

// Instantaneous radar ego-velocity from the Doppler returns of a single scan.

#include "revo/core_types.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace revo {

struct RadarPoint {
  Vec3 position = Vec3::Zero();  // radar frame, m
  double doppler = 0.0;          // m/s, negative when the point approaches
  double snr = 0.0;              // dB
};

struct RadarScan {
  Timestamp stamp;
  std::vector<RadarPoint> points;
};

struct RadarNoiseModel {
  double sigma_doppler = 0.05;     // m/s
  double sigma_azimuth = 0.005;    // rad
  double sigma_elevation = 0.005;  // rad
  double sigma_range = 0.05;       // m

  void validate() const {
    if (!(sigma_doppler > 0 && sigma_azimuth > 0 && sigma_elevation > 0 && sigma_range > 0))
      throw Error(ErrorCode::Domain, "radar noise sigmas must be positive");
  }
};

struct RadarSolverConfig {
  double range_min = 0.5;        // m, nearer returns are dropped as clutter
  double max_condition = 1e4;    // on H (ratio of extreme singular values)
  double mad_k = 3.0;
  int irls_iters = 2;            // 0 disables outlier rejection
  double min_abs_gate = 0.2;     // m/s, used when the MAD collapses to zero
  std::optional<double> min_snr;
};

struct VelocityMeasurement {
  Timestamp stamp;
  Vec3 velocity = Vec3::Zero();  // radar frame
  Cov3 covariance = Cov3::Identity();
  int inlier_count = 0;
  std::vector<bool> inlier_mask;  // one flag per point of the source scan
};

/// Ideal Doppler reading of a static point seen from a radar moving with `ego_velocity`.
inline double doppler_of(const Vec3& point_position, const Vec3& ego_velocity) {
  const double r = point_position.norm();
  if (!(r > 0.0)) throw Error(ErrorCode::Domain, "zero-norm point position");
  return -point_position.dot(ego_velocity) / r;
}

/// Position covariance of a return from its spherical measurement noise.
inline Mat3 point_position_covariance(const Vec3& p, const RadarNoiseModel& noise) {
  const double r = p.norm();
  const double az = std::atan2(p.y(), p.x());
  const double el = std::asin(std::clamp(p.z() / r, -1.0, 1.0));
  const double ca = std::cos(az), sa = std::sin(az), ce = std::cos(el), se = std::sin(el);
  Mat3 g;
  g.col(0) = Vec3(ce * ca, ce * sa, se);
  g.col(1) = r * Vec3(-ce * sa, ce * ca, 0.0);
  g.col(2) = r * Vec3(-se * ca, -se * sa, ce);
  const Vec3 var(noise.sigma_range * noise.sigma_range, noise.sigma_azimuth * noise.sigma_azimuth,
                 noise.sigma_elevation * noise.sigma_elevation);
  return g * var.asDiagonal() * g.transpose();
}

/// Jacobian of the unit line-of-sight map h(p) = -p/|p|.
inline Mat3 direction_jacobian(const Vec3& p) {
  const double r = p.norm();
  const Vec3 d = p / r;
  return -(Mat3::Identity() - d * d.transpose()) / r;
}

namespace detail {

struct DirectionSystem {
  Mat3 normal = Mat3::Zero();  // HᵀH
  Vec3 rhs = Vec3::Zero();     // Hᵀ v_d
  int rows = 0;
};

inline DirectionSystem accumulate(const std::vector<RadarPoint>& pts, const std::vector<bool>* mask) {
  DirectionSystem sys;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const Vec3 h = pts[i].position.normalized();
    sys.normal += h * h.transpose();
    sys.rhs += h * (-pts[i].doppler);
    ++sys.rows;
  }
  return sys;
}

inline double condition_of_rows(const Mat3& normal) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(normal, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(2);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

inline Vec3 solve_system(const DirectionSystem& sys, const RadarSolverConfig& cfg) {
  if (sys.rows < 3) throw Error(ErrorCode::FewerThanThreePoints, "need at least 3 radar points");
  const double cond = condition_of_rows(sys.normal);
  if (!(cond <= cfg.max_condition))
    throw Error(ErrorCode::RankDeficientGeometry, "radar direction matrix is ill-conditioned (cond " + std::to_string(cond) + ")");
  return sys.normal.ldlt().solve(sys.rhs);
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

}  // namespace detail

/// Doppler residual of one point against a velocity hypothesis; zero for a static point.
inline double doppler_residual(const RadarPoint& pt, const Vec3& v) {
  return pt.doppler + pt.position.normalized().dot(v);
}

/// Normalized median absolute deviation (consistent with σ for Gaussian data).
inline double mad_sigma(const std::vector<double>& residuals) {
  const double med = detail::median_of(residuals);
  std::vector<double> dev(residuals.size());
  std::transform(residuals.begin(), residuals.end(), dev.begin(), [med](double r) { return std::abs(r - med); });
  return 1.4826 * detail::median_of(std::move(dev));
}

/// MAD gating with refits between passes. Returns a keep-mask over `points`.
inline std::vector<bool> reject_outliers(const std::vector<RadarPoint>& points, const Vec3& initial_v,
                                         const RadarSolverConfig& cfg) {
  std::vector<bool> mask(points.size(), true);
  Vec3 v = initial_v;
  std::vector<double> res(points.size());
  for (int pass = 0; pass < cfg.irls_iters; ++pass) {
    for (std::size_t i = 0; i < points.size(); ++i) res[i] = doppler_residual(points[i], v);
    const double mad = mad_sigma(res);
    const double gate = mad > 1e-9 ? cfg.mad_k * mad : cfg.min_abs_gate;
    int kept = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      mask[i] = std::abs(res[i]) <= gate;
      kept += mask[i] ? 1 : 0;
    }
    if (kept < 3) throw Error(ErrorCode::FewerThanThreePoints, "outlier rejection left fewer than 3 points");
    v = detail::solve_system(detail::accumulate(points, &mask), cfg);
  }
  return mask;
}

struct VelocityCovarianceTerms {
  Cov3 doppler_term;    // σ²(HᵀH)⁻¹
  Cov3 position_term;   // (HᵀH)⁻¹ (Σ JᵢᵀΣ_{p,i}Jᵢ) (HᵀH)⁻¹
  Cov3 total() const { return doppler_term + position_term; }
};

/// Covariance of the least-squares velocity with explicit per-point position covariances.
inline VelocityCovarianceTerms velocity_covariance_terms(const std::vector<Vec3>& positions,
                                                         const std::vector<Mat3>& position_covs,
                                                         double sigma_doppler) {
  Mat3 normal = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3 h = positions[i].normalized();
    normal += h * h.transpose();
    const Mat3 j = direction_jacobian(positions[i]);
    spread += j.transpose() * position_covs[i] * j;
  }
  Eigen::FullPivLU<Mat3> lu(normal);
  if (positions.size() < 3 || !lu.isInvertible())
    throw Error(ErrorCode::RankDeficientGeometry, "HᵀH is singular");
  const Mat3 inv = lu.inverse();
  VelocityCovarianceTerms out;
  out.doppler_term = sigma_doppler * sigma_doppler * inv;
  out.position_term = inv * spread * inv;
  out.doppler_term = 0.5 * (out.doppler_term + out.doppler_term.transpose()).eval();
  out.position_term = 0.5 * (out.position_term + out.position_term.transpose()).eval();
  return out;
}

inline Cov3 velocity_covariance(const std::vector<RadarPoint>& inliers, const RadarNoiseModel& noise) {
  std::vector<Vec3> pos;
  std::vector<Mat3> covs;
  pos.reserve(inliers.size());
  covs.reserve(inliers.size());
  for (const auto& p : inliers) {
    pos.push_back(p.position);
    covs.push_back(point_position_covariance(p.position, noise));
  }
  return velocity_covariance_terms(pos, covs, noise.sigma_doppler).total();
}

inline VelocityMeasurement solve_velocity(const RadarScan& scan, const RadarNoiseModel& noise,
                                          const RadarSolverConfig& cfg = {}) {
  noise.validate();
  std::vector<RadarPoint> kept;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    if (!p.position.allFinite() || !std::isfinite(p.doppler)) continue;
    if (!(p.position.norm() > cfg.range_min)) continue;
    if (cfg.min_snr && p.snr < *cfg.min_snr) continue;
    kept.push_back(p);
    source.push_back(i);
  }
  if (kept.size() < 3) throw Error(ErrorCode::FewerThanThreePoints, "fewer than 3 usable radar points");

  Vec3 v = detail::solve_system(detail::accumulate(kept, nullptr), cfg);
  std::vector<bool> mask(kept.size(), true);
  if (cfg.irls_iters > 0) {
    mask = reject_outliers(kept, v, cfg);
    v = detail::solve_system(detail::accumulate(kept, &mask), cfg);
  }

  VelocityMeasurement out;
  out.stamp = scan.stamp;
  out.velocity = v;
  out.inlier_mask.assign(scan.points.size(), false);
  std::vector<RadarPoint> inliers;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (!mask[i]) continue;
    out.inlier_mask[source[i]] = true;
    inliers.push_back(kept[i]);
  }
  out.inlier_count = static_cast<int>(inliers.size());
  out.covariance = velocity_covariance(inliers, noise);
  return out;
}

}  // namespace revo
