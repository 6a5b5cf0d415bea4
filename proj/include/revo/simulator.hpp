#pragma once

// Synthetic ground truth and sensor streams at measurement, flow and event fidelity.

#include "revo/core_types.hpp"
#include "revo/epipolar_angular.hpp"
#include "revo/event_flow.hpp"
#include "revo/radar_velocity.hpp"
#include "revo/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace revo {

/// offset + amplitude·sin(2π f t + phase) + (t ≥ step_time ? step_delta : 0)
struct AxisProfile {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double phase_rad = 0.0;
  double step_time_s = 0.0;
  double step_delta = 0.0;

  double value(double t) const {
    double v = offset + amplitude * std::sin(2.0 * std::numbers::pi * frequency_hz * t + phase_rad);
    if (step_delta != 0.0 && t >= step_time_s) v += step_delta;
    return v;
  }
};

struct TwistProfile {
  std::array<AxisProfile, 3> linear;
  std::array<AxisProfile, 3> angular;

  Vec3 linear_at(double t) const { return {linear[0].value(t), linear[1].value(t), linear[2].value(t)}; }
  Vec3 angular_at(double t) const { return {angular[0].value(t), angular[1].value(t), angular[2].value(t)}; }
};

struct RadarSimConfig {
  double rate_hz = 10.0;
  int points_per_scan = 100;
  double fov_azimuth = 60.0 * std::numbers::pi / 180.0;    // half-angle
  double fov_elevation = 20.0 * std::numbers::pi / 180.0;  // half-angle
  double range_min = 2.0;
  double range_max = 50.0;
  RadarNoiseModel noise;
  bool perturb_positions = true;   // report positions with the noise model's spherical noise
  double outlier_fraction = 0.1;
  double outlier_speed_span = 10.0;  // outlier Doppler shift drawn from U(-span, span)
};

struct AngularSimConfig {
  double rate_hz = 100.0;
  double sigma = 0.02;  // rad/s per axis
  bool exponential_gaps = false;
};

struct CameraSimConfig {
  CameraIntrinsics intrinsics;
  Extrinsics extrinsics{forward_looking_camera_rotation(), Vec3::Zero()};
  int landmark_count = 50;
  double depth_min = 3.0;
  double depth_max = 15.0;
};

/// Axis-aligned moving gratings confined to patches. Each patch holds a vertical grating in its
/// upper rows and a horizontal grating in its lower rows, separated by two silent rows, and both
/// move with the exact image flow of a landmark at the patch centre.
struct EventSimConfig {
  bool enabled = false;
  int patch_size = 15;
  int patch_stride = 3;        // every n-th patch of the grid, in both directions
  double grating_spacing = 12.0;  // px between grating lines
  double jitter_s = 0.0;
  double step_s = 5e-4;        // integration step for the grating phase
};

struct ScenarioConfig {
  double duration_s = 60.0;
  TwistProfile twist;
  RadarSimConfig radar;
  AngularSimConfig angular;
  CameraSimConfig camera;
  EventSimConfig event;
  double truth_rate_hz = 1000.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(duration_s > 0)) throw Error(ErrorCode::ConfigError, "sim.duration_s must be positive");
    if (!(radar.rate_hz > 0) || !(angular.rate_hz > 0) || !(truth_rate_hz > 0))
      throw Error(ErrorCode::ConfigError, "rates must be positive");
    if (!(radar.outlier_fraction >= 0.0 && radar.outlier_fraction < 1.0))
      throw Error(ErrorCode::ConfigError, "sim.radar_outlier_fraction must be in [0, 1)");
    if (radar.points_per_scan < 0) throw Error(ErrorCode::ConfigError, "sim.radar_points must be >= 0");
    if (!(radar.range_min > 0 && radar.range_max >= radar.range_min))
      throw Error(ErrorCode::ConfigError, "sim radar range span invalid");
    if (!(camera.depth_min > 0 && camera.depth_max >= camera.depth_min))
      throw Error(ErrorCode::ConfigError, "sim depth span invalid");
    camera.intrinsics.validate();
  }
};

/// Sinusoidal scenario used by the end-to-end checks: |v| amplitude 2 m/s and |ω| amplitude
/// 1 rad/s per axis at 0.2–0.5 Hz.
inline ScenarioConfig default_scenario() {
  ScenarioConfig s;
  const double f[3] = {0.2, 0.35, 0.5};
  const double fw[3] = {0.3, 0.45, 0.25};
  for (int a = 0; a < 3; ++a) {
    s.twist.linear[a] = {0.0, 2.0, f[a], 0.7 * a + 0.3, 0.0, 0.0};
    s.twist.angular[a] = {0.0, 1.0, fw[a], 1.1 * a + 0.5, 0.0, 0.0};
  }
  return s;
}

struct TwistSample {
  Timestamp stamp;
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
};

struct GroundTruth {
  std::vector<TwistSample> twist;  // body frame
  std::vector<PoseSample> poses;
};

inline std::int64_t period_ns(double rate_hz) { return std::llround(1e9 / rate_hz); }

inline GroundTruth gen_ground_truth(const ScenarioConfig& sc, bool with_poses = true) {
  GroundTruth gt;
  const std::int64_t dt = period_ns(sc.truth_rate_hz);
  const std::int64_t end = std::llround(sc.duration_s * 1e9);
  for (std::int64_t t = 0; t <= end; t += dt) {
    const double ts = static_cast<double>(t) * 1e-9;
    gt.twist.push_back({Timestamp{t}, sc.twist.linear_at(ts), sc.twist.angular_at(ts)});
  }
  if (with_poses) {
    const TwistProfile prof = sc.twist;
    gt.poses = integrate_twist([prof](double t) { return std::make_pair(prof.linear_at(t), prof.angular_at(t)); },
                               Timestamp{0}, Timestamp{end}, dt);
  }
  return gt;
}

/// Camera-frame twist from the body (radar-frame) twist.
inline std::pair<Vec3, Vec3> camera_twist(const Vec3& v_body, const Vec3& w_body, const Extrinsics& ext) {
  return {camera_velocity_from_radar(v_body, w_body, ext), ext.rotation_radar_to_event * w_body};
}

struct RadarSimOutput {
  std::vector<RadarScan> scans;
  std::vector<std::vector<bool>> injected_outlier;
};

inline RadarSimOutput gen_radar_scans(const ScenarioConfig& sc) {
  std::mt19937_64 rng(sc.seed * 0x9E3779B97F4A7C15ULL + 1);
  const auto& rc = sc.radar;
  std::uniform_real_distribution<double> az_d(-rc.fov_azimuth, rc.fov_azimuth);
  std::uniform_real_distribution<double> el_d(-rc.fov_elevation, rc.fov_elevation);
  std::uniform_real_distribution<double> r_d(rc.range_min, rc.range_max);
  std::uniform_real_distribution<double> out_d(-rc.outlier_speed_span, rc.outlier_speed_span);
  std::uniform_real_distribution<double> snr_d(10.0, 30.0);
  std::normal_distribution<double> n01(0.0, 1.0);

  RadarSimOutput out;
  const std::int64_t dt = period_ns(rc.rate_hz);
  const std::int64_t end = std::llround(sc.duration_s * 1e9);
  const int n = rc.points_per_scan;
  const int n_out = static_cast<int>(std::lround(rc.outlier_fraction * n));
  for (std::int64_t t = 0; t <= end; t += dt) {
    const Vec3 v = sc.twist.linear_at(static_cast<double>(t) * 1e-9);
    RadarScan scan;
    scan.stamp = Timestamp{t};
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> outlier(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n_out; ++i) outlier[order[i]] = true;
    for (int i = 0; i < n; ++i) {
      const double az = az_d(rng), el = el_d(rng), r = r_d(rng);
      const Vec3 p = r * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      RadarPoint pt;
      pt.doppler = doppler_of(p, v) + rc.noise.sigma_doppler * n01(rng);
      if (outlier[i]) pt.doppler += out_d(rng);
      if (rc.perturb_positions) {
        const double rr = r + rc.noise.sigma_range * n01(rng);
        const double aa = az + rc.noise.sigma_azimuth * n01(rng);
        const double ee = el + rc.noise.sigma_elevation * n01(rng);
        pt.position = rr * Vec3(std::cos(ee) * std::cos(aa), std::cos(ee) * std::sin(aa), std::sin(ee));
      } else {
        pt.position = p;
      }
      pt.snr = snr_d(rng);
      scan.points.push_back(pt);
    }
    out.scans.push_back(std::move(scan));
    out.injected_outlier.push_back(std::move(outlier));
  }
  return out;
}

/// Normalized-plane velocity of a static point seen at x with depth lambda.
inline Vec3 image_flow(const Vec3& x, double lambda, const Vec3& v_cam, const Vec3& w_cam) {
  const Vec3 p = lambda * x;
  const double lambda_dot = (w_cam.cross(p) + v_cam).z();
  return w_cam.cross(x) + v_cam / lambda - (lambda_dot / lambda) * x;
}

struct FlowSample {
  Vec2 pixel = Vec2::Zero();
  Vec2 flow = Vec2::Zero();  // px/s
  double depth = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 xdot = Vec3::Zero();
};

struct Landmark {
  Vec2 pixel;
  double depth;
};

inline std::vector<Landmark> gen_landmarks(const ScenarioConfig& sc) {
  std::mt19937_64 rng(sc.seed * 0x9E3779B97F4A7C15ULL + 2);
  const auto& in = sc.camera.intrinsics;
  std::uniform_real_distribution<double> ux(8.0, in.width - 9.0), uy(8.0, in.height - 9.0);
  std::uniform_real_distribution<double> dd(sc.camera.depth_min, sc.camera.depth_max);
  std::vector<Landmark> lm;
  for (int i = 0; i < sc.camera.landmark_count; ++i) {
    const double x = ux(rng), y = uy(rng);
    lm.push_back({Vec2(x, y), dd(rng)});
  }
  return lm;
}

inline std::vector<FlowSample> gen_flows(const ScenarioConfig& sc, double t) {
  const auto [v_cam, w_cam] = camera_twist(sc.twist.linear_at(t), sc.twist.angular_at(t), sc.camera.extrinsics);
  const auto& in = sc.camera.intrinsics;
  std::vector<FlowSample> out;
  for (const auto& lm : gen_landmarks(sc)) {
    if (!(lm.depth > 0.0)) continue;
    FlowSample f;
    f.pixel = lm.pixel;
    f.depth = lm.depth;
    f.x = pixel_to_homogeneous(lm.pixel, in);
    f.xdot = image_flow(f.x, lm.depth, v_cam, w_cam);
    f.flow = Vec2(f.xdot.x() * in.fx, f.xdot.y() * in.fy);
    out.push_back(f);
  }
  return out;
}

inline std::vector<PatchFlow> flows_as_patches(const std::vector<FlowSample>& flows, Timestamp stamp) {
  std::vector<PatchFlow> out;
  for (const auto& f : flows) {
    PatchFlow p;
    p.center = f.pixel;
    p.flow = f.flow;
    p.stamp = stamp;
    p.n_edges = 2;
    p.condition = 1.0;
    out.push_back(p);
  }
  return out;
}

/// A straight edge sweeping a pixel rectangle: pixel u fires at t0 + (nᵀu − offset)/speed while
/// that time lies in [t0, t1].
struct EdgeSweep {
  Vec2 normal = Vec2(1.0, 0.0);  // unit direction of motion
  double speed = 2000.0;         // px/s
  double offset = 0.0;           // nᵀu of the edge at t0
  double t0_s = 0.0;
  double t1_s = 1.0;
  int x_min = 0, x_max = 99, y_min = 0, y_max = 99;
};

inline std::vector<Event> sweep_edge_events(const EdgeSweep& edge, double jitter_s = 0.0, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Event> out;
  for (int y = edge.y_min; y <= edge.y_max; ++y) {
    for (int x = edge.x_min; x <= edge.x_max; ++x) {
      const double t = edge.t0_s + (edge.normal.dot(Vec2(x, y)) - edge.offset) / edge.speed;
      if (t < edge.t0_s - 1e-12 || t > edge.t1_s + 1e-12) continue;
      const double tj = jitter_s > 0.0 ? t + jitter_s * n01(rng) : t;
      out.push_back({Timestamp{std::max<std::int64_t>(0, std::llround(tj * 1e9))}, x, y, 1});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.stamp < b.stamp; });
  return out;
}

/// Patch centres of the event grid, matching compute_patch_flows().
inline std::vector<Vec2> event_patch_centers(const ScenarioConfig& sc) {
  std::vector<Vec2> out;
  const int ps = sc.event.patch_size;
  const auto& in = sc.camera.intrinsics;
  int iy = 0;
  for (int py = 0; py + ps <= in.height; py += ps, ++iy) {
    int ix = 0;
    for (int px = 0; px + ps <= in.width; px += ps, ++ix) {
      const int sel = sc.event.patch_stride / 2;
      if (iy % sc.event.patch_stride != sel || ix % sc.event.patch_stride != sel) continue;
      out.emplace_back(px + 0.5 * (ps - 1), py + 0.5 * (ps - 1));
    }
  }
  return out;
}

/// Depth of the scene behind each event patch.
inline std::vector<double> event_patch_depths(const ScenarioConfig& sc, std::size_t count) {
  std::mt19937_64 rng(sc.seed * 0x9E3779B97F4A7C15ULL + 3);
  std::uniform_real_distribution<double> dd(sc.camera.depth_min, sc.camera.depth_max);
  std::vector<double> out(count);
  for (auto& d : out) d = dd(rng);
  return out;
}

inline std::vector<Event> gen_events(const ScenarioConfig& sc) {
  std::mt19937_64 rng(sc.seed * 0x9E3779B97F4A7C15ULL + 4);
  std::uniform_real_distribution<double> phase_d(0.0, sc.event.grating_spacing);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto& in = sc.camera.intrinsics;
  const auto centers = event_patch_centers(sc);
  const auto depths = event_patch_depths(sc, centers.size());
  const int half = sc.event.patch_size / 2;
  const double s = sc.event.grating_spacing;
  const double h = sc.event.step_s;
  const int steps = static_cast<int>(std::ceil(sc.duration_s / h));

  struct Region {
    int axis;  // 0: grating lines are columns, moves along x; 1: rows, along y
    int lo, hi;              // moving-coordinate pixel range
    int cross_lo, cross_hi;  // pixel range along the line
    double phase;
    std::size_t patch;
  };
  std::vector<Region> regions;
  for (std::size_t p = 0; p < centers.size(); ++p) {
    const int cx = static_cast<int>(centers[p].x()), cy = static_cast<int>(centers[p].y());
    regions.push_back({0, cx - half, cx + half, cy - half, cy - 2, phase_d(rng), p});
    regions.push_back({1, cy + 1, cy + half, cx - half, cx + half, phase_d(rng), p});
  }

  std::vector<Event> out;
  auto flow_at = [&](std::size_t p, double t) {
    const auto [v_cam, w_cam] = camera_twist(sc.twist.linear_at(t), sc.twist.angular_at(t), sc.camera.extrinsics);
    const Vec3 x = pixel_to_homogeneous(centers[p], in);
    const Vec3 xd = image_flow(x, depths[p], v_cam, w_cam);
    return Vec2(xd.x() * in.fx, xd.y() * in.fy);
  };

  std::vector<Vec2> flow_prev(centers.size());
  for (std::size_t p = 0; p < centers.size(); ++p) flow_prev[p] = flow_at(p, 0.0);
  for (int k = 0; k < steps; ++k) {
    const double ta = k * h, tb = std::min(sc.duration_s, (k + 1) * h);
    std::vector<Vec2> flow_next(centers.size());
    for (std::size_t p = 0; p < centers.size(); ++p) flow_next[p] = flow_at(p, tb);
    for (auto& r : regions) {
      const double fa = flow_prev[r.patch](r.axis), fb = flow_next[r.patch](r.axis);
      const double pa = r.phase;
      const double pb = pa + 0.5 * (fa + fb) * (tb - ta);
      r.phase = pb;
      if (pa == pb) continue;
      const double lo = std::min(pa, pb), hi = std::max(pa, pb);
      for (int c = r.lo; c <= r.hi; ++c) {
        // grating lines sit where coordinate − phase ≡ 0 (mod s)
        const double j_lo = std::ceil((c - hi) / s), j_hi = std::floor((c - lo) / s);
        for (double j = j_lo; j <= j_hi; ++j) {
          const double cross_phase = c - j * s;
          if (cross_phase <= lo && pa < pb) continue;  // half-open (pa, pb]
          if (cross_phase >= hi && pa > pb) continue;
          const double t = ta + (cross_phase - pa) / (pb - pa) * (tb - ta);
          for (int q = r.cross_lo; q <= r.cross_hi; ++q) {
            const double tj = sc.event.jitter_s > 0.0 ? t + sc.event.jitter_s * n01(rng) : t;
            Event e;
            e.stamp = Timestamp{std::max<std::int64_t>(0, std::llround(tj * 1e9))};
            e.x = r.axis == 0 ? c : q;
            e.y = r.axis == 0 ? q : c;
            e.polarity = pb > pa ? 1 : -1;
            out.push_back(e);
          }
        }
      }
    }
    flow_prev = std::move(flow_next);
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.stamp < b.stamp; });
  return out;
}

inline std::vector<AngularVelocityMeasurement> gen_angular_measurements(const ScenarioConfig& sc) {
  std::mt19937_64 rng(sc.seed * 0x9E3779B97F4A7C15ULL + 5);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::exponential_distribution<double> gap(sc.angular.rate_hz);
  const Mat3 rot = sc.camera.extrinsics.rotation_radar_to_event.matrix();
  const double sig = sc.angular.sigma;
  const std::int64_t end = std::llround(sc.duration_s * 1e9);
  const std::int64_t dt = period_ns(sc.angular.rate_hz);
  std::vector<AngularVelocityMeasurement> out;
  std::int64_t t = 0;
  while (t <= end) {
    AngularVelocityMeasurement m;
    m.stamp = Timestamp{t};
    m.omega = rot * sc.twist.angular_at(static_cast<double>(t) * 1e-9) + sig * Vec3(n01(rng), n01(rng), n01(rng));
    const double reported = std::max(sig, 1e-3);  // keeps the covariance invertible at zero noise
    m.covariance = reported * reported * Mat3::Identity();
    m.n_rows = 0;
    m.seed_velocity_stamp = m.stamp;
    out.push_back(m);
    t += sc.angular.exponential_gaps ? std::max<std::int64_t>(1, std::llround(gap(rng) * 1e9)) : dt;
  }
  return out;
}

}  // namespace revo
