#pragma once

// Velocity and pose error metrics of an estimated twist track against ground truth.
//
// AVE  RMSE of ‖v̂(t) − v(t)‖ over estimate stamps.
// RVE  RMSE of ‖(v̂(t+h) − v̂(t)) − (v(t+h) − v(t))‖ with horizon h.
// APE  RMSE of ‖p̂(t) − p(t)‖ with both tracks integrated from the identity at the first stamp.
// RPE  RMSE of the relative translation error over segments of fixed travelled distance.
// The time-window variant reports the RMS of (error / distance) over fixed-duration windows.

#include "revo/core_types.hpp"
#include "revo/simulator.hpp"
#include "revo/spline.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace revo {

struct MetricsConfig {
  double rve_horizon_s = 1.0;
  double rpe_segment_m = 10.0;
  double rpe_window_s = 10.0;
  std::int64_t integration_step_ns = kNsPerMs;
  double min_window_distance_m = 1e-3;  // windows shorter than this are skipped in the ratio
};

struct MetricsReport {
  double ave_linear = 0.0;
  double rve_linear = 0.0;
  double ave_angular = 0.0;
  double rve_angular = 0.0;
  double ape = 0.0;
  double rpe = 0.0;
  double rpe_window_ratio = 0.0;
  std::array<double, 3> ave_linear_axis{};
  std::array<double, 3> ave_angular_axis{};
  std::array<double, 3> ape_axis{};
  double rve_horizon_s = 0.0;
  double rpe_segment_m = 0.0;
  double rpe_window_s = 0.0;
  double distance_m = 0.0;
  double duration_s = 0.0;
  int samples = 0;
  int rve_pairs = 0;
  int rpe_segments = 0;
  int rpe_windows = 0;
};

namespace detail {

/// Linear interpolation of a sampled twist track at `t_ns`, clamped at the ends.
inline std::pair<Vec3, Vec3> interpolate_twist(const std::vector<TwistSample>& s, std::int64_t t_ns) {
  if (t_ns <= s.front().stamp.ns) return {s.front().linear, s.front().angular};
  if (t_ns >= s.back().stamp.ns) return {s.back().linear, s.back().angular};
  const auto it = std::upper_bound(s.begin(), s.end(), t_ns,
                                   [](std::int64_t t, const TwistSample& x) { return t < x.stamp.ns; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double span = static_cast<double>(b.stamp.ns - a.stamp.ns);
  const double u = span > 0.0 ? static_cast<double>(t_ns - a.stamp.ns) / span : 0.0;
  return {a.linear + u * (b.linear - a.linear), a.angular + u * (b.angular - a.angular)};
}

inline double rms(double sum_sq, int n) { return n > 0 ? std::sqrt(sum_sq / n) : 0.0; }

/// First index j > i with key[j] − key[i] ≥ span, or n.
template <typename Key>
std::size_t advance_until(const std::vector<Key>& key, std::size_t i, std::size_t j, Key span) {
  j = std::max(j, i + 1);
  while (j < key.size() && key[j] - key[i] < span) ++j;
  return j;
}

}  // namespace detail

/// Pose track of a sampled twist (linear interpolation between samples) at the given stamps.
/// Time is taken relative to the first stamp so results do not depend on the time origin.
inline std::vector<PoseSample> integrate_samples(const std::vector<TwistSample>& samples,
                                                 const std::vector<std::int64_t>& stamps_ns, std::int64_t step_ns) {
  if (stamps_ns.empty()) return {};
  const std::int64_t origin = stamps_ns.front();
  std::vector<std::int64_t> rel(stamps_ns.size());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = stamps_ns[i] - origin;
  auto fn = [&samples, origin](double t) {
    // sub-ns rounding is irrelevant at the 1 ms integration step
    return detail::interpolate_twist(samples, origin + static_cast<std::int64_t>(std::llround(t * 1e9)));
  };
  auto poses = integrate_twist_at(fn, rel, step_ns);
  for (std::size_t i = 0; i < poses.size(); ++i) poses[i].stamp = Timestamp{stamps_ns[i]};
  return poses;
}

inline MetricsReport compute_metrics(const std::vector<TwistSample>& estimates, const std::vector<TwistSample>& truth,
                                     const MetricsConfig& cfg = {}) {
  if (estimates.empty() || truth.empty()) throw Error(ErrorCode::DataError, "metrics need non-empty estimate and truth");
  std::vector<TwistSample> est;
  for (const auto& e : estimates)
    if (e.stamp >= truth.front().stamp && e.stamp <= truth.back().stamp) est.push_back(e);
  if (est.empty()) throw Error(ErrorCode::DataError, "estimate and truth do not overlap in time");

  MetricsReport r;
  r.rve_horizon_s = cfg.rve_horizon_s;
  r.rpe_segment_m = cfg.rpe_segment_m;
  r.rpe_window_s = cfg.rpe_window_s;
  r.samples = static_cast<int>(est.size());
  r.duration_s = static_cast<double>(est.back().stamp.ns - est.front().stamp.ns) * 1e-9;

  std::vector<TwistSample> ref(est.size());
  std::vector<std::int64_t> stamps(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    stamps[i] = est[i].stamp.ns;
    const auto [v, w] = detail::interpolate_twist(truth, stamps[i]);
    ref[i] = {est[i].stamp, v, w};
  }

  // AVE
  double sl = 0.0, sa = 0.0;
  std::array<double, 3> al{}, aa{};
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3 el = est[i].linear - ref[i].linear;
    const Vec3 ea = est[i].angular - ref[i].angular;
    sl += el.squaredNorm();
    sa += ea.squaredNorm();
    for (int a = 0; a < 3; ++a) {
      al[a] += el(a) * el(a);
      aa[a] += ea(a) * ea(a);
    }
  }
  r.ave_linear = detail::rms(sl, r.samples);
  r.ave_angular = detail::rms(sa, r.samples);
  for (int a = 0; a < 3; ++a) {
    r.ave_linear_axis[a] = detail::rms(al[a], r.samples);
    r.ave_angular_axis[a] = detail::rms(aa[a], r.samples);
  }

  // RVE
  const auto horizon_ns = static_cast<std::int64_t>(std::llround(cfg.rve_horizon_s * 1e9));
  double rl = 0.0, ra = 0.0;
  for (std::size_t i = 0, j = 0; i < est.size(); ++i) {
    j = detail::advance_until(stamps, i, j, horizon_ns);
    if (j >= est.size()) break;
    const Vec3 dl = (est[j].linear - est[i].linear) - (ref[j].linear - ref[i].linear);
    const Vec3 da = (est[j].angular - est[i].angular) - (ref[j].angular - ref[i].angular);
    rl += dl.squaredNorm();
    ra += da.squaredNorm();
    ++r.rve_pairs;
  }
  r.rve_linear = detail::rms(rl, r.rve_pairs);
  r.rve_angular = detail::rms(ra, r.rve_pairs);

  // APE
  const auto pe = integrate_samples(est, stamps, cfg.integration_step_ns);
  const auto pt = integrate_samples(truth, stamps, cfg.integration_step_ns);
  double sp = 0.0;
  std::array<double, 3> ap{};
  for (std::size_t i = 0; i < pe.size(); ++i) {
    const Vec3 d = pe[i].position - pt[i].position;
    sp += d.squaredNorm();
    for (int a = 0; a < 3; ++a) ap[a] += d(a) * d(a);
  }
  r.ape = detail::rms(sp, r.samples);
  for (int a = 0; a < 3; ++a) r.ape_axis[a] = detail::rms(ap[a], r.samples);

  // RPE
  std::vector<double> dist(pt.size(), 0.0);
  for (std::size_t i = 1; i < pt.size(); ++i) dist[i] = dist[i - 1] + (pt[i].position - pt[i - 1].position).norm();
  r.distance_m = dist.back();
  auto rel_error = [&](std::size_t i, std::size_t j) {
    const Vec3 dt = pt[i].orientation.inverse() * (pt[j].position - pt[i].position);
    const Vec3 de = pe[i].orientation.inverse() * (pe[j].position - pe[i].position);
    return (de - dt).norm();
  };
  double sr = 0.0;
  for (std::size_t i = 0, j = 0; i < pt.size(); ++i) {
    j = detail::advance_until(dist, i, j, cfg.rpe_segment_m);
    if (j >= pt.size()) break;
    const double e = rel_error(i, j);
    sr += e * e;
    ++r.rpe_segments;
  }
  r.rpe = detail::rms(sr, r.rpe_segments);

  const auto window_ns = static_cast<std::int64_t>(std::llround(cfg.rpe_window_s * 1e9));
  double sw = 0.0;
  for (std::size_t i = 0, j = 0; i < pt.size(); ++i) {
    j = detail::advance_until(stamps, i, j, window_ns);
    if (j >= pt.size()) break;
    const double d = dist[j] - dist[i];
    if (d < cfg.min_window_distance_m) continue;
    const double ratio = rel_error(i, j) / d;
    sw += ratio * ratio;
    ++r.rpe_windows;
  }
  r.rpe_window_ratio = detail::rms(sw, r.rpe_windows);
  return r;
}

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["AVE_linear"] = r.ave_linear;
  j["RVE_linear"] = r.rve_linear;
  j["AVE_angular"] = r.ave_angular;
  j["RVE_angular"] = r.rve_angular;
  j["APE"] = r.ape;
  j["RPE"] = r.rpe;
  j["RPE_window_ratio"] = r.rpe_window_ratio;
  j["per_axis"] = {{"AVE_linear", r.ave_linear_axis}, {"AVE_angular", r.ave_angular_axis}, {"APE", r.ape_axis}};
  j["rve_horizon_s"] = r.rve_horizon_s;
  j["rpe_segment_m"] = r.rpe_segment_m;
  j["rpe_window_s"] = r.rpe_window_s;
  j["distance_m"] = r.distance_m;
  j["duration_s"] = r.duration_s;
  j["counts"] = {{"samples", r.samples}, {"rve_pairs", r.rve_pairs}, {"rpe_segments", r.rpe_segments},
                 {"rpe_windows", r.rpe_windows}};
  return j;
}

}  // namespace revo
