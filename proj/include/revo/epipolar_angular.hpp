#pragma once

// Angular velocity from patch flows through the continuous epipolar constraint.

#include "revo/core_types.hpp"
#include "revo/event_flow.hpp"
#include "revo/radar_velocity.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

namespace revo {

struct EpipolarConfig {
  double min_excitation = 0.1;       // m/s on |v_e|
  double min_row_norm = 1e-4;        // on |[x]× v_e|, drops rows near the focus of expansion
  double max_omega_condition = 1e4;
  int outlier_passes = 0;            // MAD passes over row residuals
  double mad_k = 3.0;
  bool weight_by_condition = false;  // weight rows by 1/patch condition
  std::int64_t max_seed_staleness_ns = 120 * kNsPerMs;
  double min_sigma = 1e-3;           // rad/s floor added to the reported covariance
};

/// a·ω = eta, one row per patch.
struct EpipolarRow {
  Vec3 a = Vec3::Zero();
  double eta = 0.0;
  double weight = 1.0;
};

struct AngularVelocityMeasurement {
  Timestamp stamp;
  Vec3 omega = Vec3::Zero();  // camera frame, rad/s
  Cov3 covariance = Cov3::Identity();
  int n_rows = 0;
  Timestamp seed_velocity_stamp;
};

/// Camera-frame linear velocity of the rigidly attached camera. Without `omega_r` the
/// lever-arm term is dropped.
inline Vec3 camera_velocity_from_radar(const Vec3& v_r, const std::optional<Vec3>& omega_r, const Extrinsics& ext) {
  const Vec3 body = omega_r ? Vec3(v_r + omega_r->cross(ext.lever_arm_radar_to_event)) : v_r;
  return ext.rotation_radar_to_event * body;
}

/// Constraint row for a normalized image point x and its normalized-plane velocity xdot.
inline EpipolarRow epipolar_row(const Vec3& x, const Vec3& xdot, const Vec3& v_e) {
  const Vec3 c = x.cross(v_e);
  EpipolarRow row;
  row.a = skew(x).transpose() * c;
  row.eta = -c.dot(xdot);
  return row;
}

inline std::vector<EpipolarRow> build_rows(std::span<const PatchFlow> flows, const Vec3& v_e, const CameraIntrinsics& intr,
                                           const EpipolarConfig& cfg = {}) {
  if (!(v_e.norm() >= cfg.min_excitation))
    throw Error(ErrorCode::InsufficientExcitation, "camera linear velocity below excitation threshold");
  std::vector<EpipolarRow> rows;
  rows.reserve(flows.size());
  for (const auto& f : flows) {
    const Vec3 x = pixel_to_homogeneous(f.center, intr);
    if (x.cross(v_e).norm() < cfg.min_row_norm) continue;
    const Vec3 xdot(f.flow.x() / intr.fx, f.flow.y() / intr.fy, 0.0);
    EpipolarRow row = epipolar_row(x, xdot, v_e);
    if (cfg.weight_by_condition && f.condition > 0.0) row.weight = 1.0 / f.condition;
    rows.push_back(row);
  }
  return rows;
}

namespace detail {

inline Vec3 solve_rows(std::span<const EpipolarRow> rows, const std::vector<bool>& mask, const EpipolarConfig& cfg,
                       Mat3* normal_out, int* used_out) {
  Mat3 n = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  int used = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!mask[i]) continue;
    n += rows[i].weight * rows[i].a * rows[i].a.transpose();
    b += rows[i].weight * rows[i].a * rows[i].eta;
    ++used;
  }
  if (used < 3) throw Error(ErrorCode::FewerThanThreeRows, "need at least 3 epipolar rows");
  Eigen::SelfAdjointEigenSolver<Mat3> es(n, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(2);
  const double cond = lo > 0.0 ? std::sqrt(hi / lo) : std::numeric_limits<double>::infinity();
  if (!(cond <= cfg.max_omega_condition))
    throw Error(ErrorCode::RankDeficient, "epipolar system is rank deficient (cond " + std::to_string(cond) + ")");
  *normal_out = n;
  *used_out = used;
  return n.ldlt().solve(b);
}

}  // namespace detail

inline AngularVelocityMeasurement solve_omega(std::span<const EpipolarRow> rows, const EpipolarConfig& cfg = {},
                                              Timestamp stamp = {}) {
  std::vector<bool> mask(rows.size(), true);
  Mat3 normal;
  int used = 0;
  Vec3 omega = detail::solve_rows(rows, mask, cfg, &normal, &used);
  for (int pass = 0; pass < cfg.outlier_passes; ++pass) {
    std::vector<double> res(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) res[i] = rows[i].a.dot(omega) - rows[i].eta;
    const double mad = mad_sigma(res);
    if (!(mad > 1e-15)) break;
    std::vector<bool> next(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) next[i] = std::abs(res[i]) <= cfg.mad_k * mad;
    if (std::count(next.begin(), next.end(), true) < 3) break;
    mask = std::move(next);
    omega = detail::solve_rows(rows, mask, cfg, &normal, &used);
  }

  double ss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!mask[i]) continue;
    const double r = rows[i].a.dot(omega) - rows[i].eta;
    ss += rows[i].weight * r * r;
  }
  const double s2 = used > 3 ? ss / (used - 3) : 0.0;
  AngularVelocityMeasurement m;
  m.stamp = stamp;
  m.omega = omega;
  m.covariance = s2 * normal.inverse() + cfg.min_sigma * cfg.min_sigma * Mat3::Identity();
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();
  m.n_rows = used;
  return m;
}

/// Radar measurement closest in time to `stamp`; ties resolve to the earlier one.
inline const VelocityMeasurement& nearest_radar_seed(std::span<const VelocityMeasurement> history, Timestamp stamp,
                                                     const EpipolarConfig& cfg = {}) {
  if (history.empty()) throw Error(ErrorCode::StaleSeed, "no radar velocity available");
  const auto it = std::lower_bound(history.begin(), history.end(), stamp,
                                   [](const VelocityMeasurement& m, Timestamp t) { return m.stamp < t; });
  const VelocityMeasurement* best = nullptr;
  if (it != history.end()) best = &*it;
  if (it != history.begin()) {
    const auto& prev = *std::prev(it);
    if (!best || stamp.ns - prev.stamp.ns <= best->stamp.ns - stamp.ns) best = &prev;
  }
  if (std::llabs(best->stamp.ns - stamp.ns) > cfg.max_seed_staleness_ns)
    throw Error(ErrorCode::StaleSeed, "nearest radar velocity is too old");
  return *best;
}

}  // namespace revo
