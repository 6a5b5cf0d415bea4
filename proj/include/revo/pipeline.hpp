#pragma once

// End-to-end estimation: radar front-end, angular source (angular.csv or the event front-end)
// and the sliding-window back-end.

#include "revo/config.hpp"
#include "revo/core_types.hpp"
#include "revo/dataset.hpp"
#include "revo/epipolar_angular.hpp"
#include "revo/estimator.hpp"
#include "revo/event_flow.hpp"
#include "revo/radar_velocity.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace revo {

struct PipelineStats {
  int radar_scans = 0;
  std::map<std::string, int> radar_failures;  // by error code
  int flow_evaluations = 0;
  int angular_measurements = 0;
  std::map<std::string, int> angular_failures;
  int windows = 0;
  int skipped_windows = 0;
  int dropped_measurements = 0;
};

struct PipelineResult {
  std::vector<VelocityMeasurement> radar;
  std::vector<AngularVelocityMeasurement> angular;
  std::vector<EstimateSample> estimates;
  TwistSpline spline;
  std::vector<SolverReport> reports;
  PipelineStats stats;
  bool used_events = false;
};

using LogFn = std::function<void(const std::string&)>;

inline std::vector<VelocityMeasurement> run_radar_frontend(const std::vector<RadarScan>& scans, const PipelineConfig& cfg,
                                                           PipelineStats& stats) {
  std::vector<VelocityMeasurement> out;
  out.reserve(scans.size());
  for (const auto& scan : scans) {
    ++stats.radar_scans;
    try {
      out.push_back(solve_velocity(scan, cfg.radar_noise, cfg.radar));
    } catch (const Error& e) {
      ++stats.radar_failures[to_string(e.code())];
    }
  }
  return out;
}

/// Runs the event front-end over the whole stream, feeding radar and angular measurements into
/// `backend` in time order so the lever-arm term can use the latest angular solution.
inline std::vector<AngularVelocityMeasurement> run_event_frontend(const std::vector<Event>& events,
                                                                  const std::vector<VelocityMeasurement>& radar,
                                                                  const CameraIntrinsics& intr, const Extrinsics& ext,
                                                                  const PipelineConfig& cfg, SlidingWindowEstimator& backend,
                                                                  PipelineStats& stats) {
  std::vector<AngularVelocityMeasurement> out;
  if (events.empty()) {
    for (const auto& m : radar) backend.add_radar(m);
    return out;
  }
  TimeSurface surface(intr.width, intr.height);
  surface.set_reference(events.front().stamp);
  const std::int64_t period = cfg.flow.flow_period_ns;
  const std::int64_t last = events.back().stamp.ns;
  std::size_t next_event = 0, next_radar = 0;
  std::int64_t last_stamp = std::numeric_limits<std::int64_t>::min();
  for (std::int64_t t = events.front().stamp.ns + period; t <= last + period; t += period) {
    while (next_radar < radar.size() && radar[next_radar].stamp.ns <= t) backend.add_radar(radar[next_radar++]);
    backend.update();

    std::size_t end = next_event;
    while (end < events.size() && events[end].stamp.ns <= t) ++end;
    update_time_surface(surface, std::span<const Event>(events.data() + next_event, end - next_event));
    next_event = end;
    surface.set_reference(Timestamp{t});

    ++stats.flow_evaluations;
    const FlowSnapshot snap = compute_patch_flows(surface, cfg.flow);
    if (snap.patches.size() < 3) {
      ++stats.angular_failures["too_few_patches"];
      continue;
    }
    std::int64_t mean_stamp = 0;
    for (const auto& p : snap.patches) mean_stamp += p.stamp.ns - t;
    Timestamp stamp{t + mean_stamp / static_cast<std::int64_t>(snap.patches.size())};
    try {
      const auto& seed = nearest_radar_seed(radar, stamp, cfg.epipolar);
      std::optional<Vec3> omega_r;
      if (cfg.use_lever_arm) omega_r = backend.angular_hint(stamp);
      const Vec3 v_e = camera_velocity_from_radar(seed.velocity, omega_r, ext);
      const auto rows = build_rows(snap.patches, v_e, intr, cfg.epipolar);
      if (static_cast<int>(rows.size()) < cfg.min_rows) {
        ++stats.angular_failures["too_few_rows"];
        continue;
      }
      if (stamp.ns <= last_stamp) stamp = Timestamp{last_stamp + 1};
      AngularVelocityMeasurement m = solve_omega(rows, cfg.epipolar, stamp);
      m.seed_velocity_stamp = seed.stamp;
      last_stamp = m.stamp.ns;
      backend.add_angular(m);
      out.push_back(m);
    } catch (const Error& e) {
      ++stats.angular_failures[to_string(e.code())];
    }
  }
  while (next_radar < radar.size()) backend.add_radar(radar[next_radar++]);
  return out;
}

inline PipelineResult run_pipeline(const Dataset& ds, const CameraIntrinsics& intr, const Extrinsics& ext,
                                   const PipelineConfig& cfg, const LogFn& log = {}) {
  cfg.validate();
  PipelineResult res;
  res.radar = run_radar_frontend(ds.radar, cfg, res.stats);
  if (res.radar.empty()) throw Error(ErrorCode::SolverStalled, "radar front-end produced no velocity");

  SlidingWindowEstimator backend(cfg.backend, ext);
  if (log) backend.on_warning = log;

  const bool use_events = cfg.angular_source == AngularSource::Events ||
                          (cfg.angular_source == AngularSource::Auto && !ds.angular.has_value());
  if (use_events) {
    res.used_events = true;
    res.angular = run_event_frontend(ds.events, res.radar, intr, ext, cfg, backend, res.stats);
  } else {
    if (!ds.angular) throw Error(ErrorCode::DataError, "angular.csv required by event.source = angular");
    res.angular = *ds.angular;
    // merge by time so the back-end can solve windows as they complete
    std::size_t i = 0, j = 0;
    while (i < res.radar.size() || j < res.angular.size()) {
      if (j >= res.angular.size() || (i < res.radar.size() && res.radar[i].stamp <= res.angular[j].stamp))
        backend.add_radar(res.radar[i++]);
      else
        backend.add_angular(res.angular[j++]);
      backend.update();
    }
  }
  backend.finish();
  if (!backend.has_solution()) throw Error(ErrorCode::SolverStalled, "back-end produced no solution");

  res.stats.angular_measurements = static_cast<int>(res.angular.size());
  res.stats.windows = static_cast<int>(backend.reports().size());
  res.stats.skipped_windows = backend.skipped_windows();
  res.stats.dropped_measurements = backend.dropped_measurements();
  res.estimates = backend.estimates(cfg.backend.output_period_ns);
  res.spline = backend.spline();
  res.reports = backend.reports();
  return res;
}

inline nlohmann::ordered_json stats_to_json(const PipelineStats& s) {
  nlohmann::ordered_json j;
  j["radar_scans"] = s.radar_scans;
  j["radar_failures"] = s.radar_failures;
  j["flow_evaluations"] = s.flow_evaluations;
  j["angular_measurements"] = s.angular_measurements;
  j["angular_failures"] = s.angular_failures;
  j["windows"] = s.windows;
  j["skipped_windows"] = s.skipped_windows;
  j["dropped_measurements"] = s.dropped_measurements;
  return j;
}

/// Time surface, normal flow and patch flow summary at `t_ns` for debugging.
inline nlohmann::ordered_json flow_debug(const std::vector<Event>& events, const CameraIntrinsics& intr,
                                         const EventFlowConfig& cfg, std::int64_t t_ns) {
  TimeSurface surface(intr.width, intr.height);
  if (!events.empty()) surface.set_reference(Timestamp{std::min(events.front().stamp.ns, t_ns)});
  const auto end = std::upper_bound(events.begin(), events.end(), t_ns,
                                    [](std::int64_t t, const Event& e) { return t < e.stamp.ns; });
  update_time_surface(surface, std::span<const Event>(events.data(), static_cast<std::size_t>(end - events.begin())));
  surface.set_reference(Timestamp{t_ns});
  const FlowSnapshot snap = compute_patch_flows(surface, cfg);

  int fired = 0, fresh = 0;
  for (int y = 0; y < surface.height(); ++y)
    for (int x = 0; x < surface.width(); ++x) {
      fired += surface.at(x, y) != TimeSurface::kNever ? 1 : 0;
      fresh += surface.is_valid(x, y, cfg.decay_window_ns) ? 1 : 0;
    }
  nlohmann::ordered_json j;
  j["t_ns"] = t_ns;
  j["events_applied"] = end - events.begin();
  j["surface"] = {{"fired_pixels", fired}, {"fresh_pixels", fresh}, {"decay_window_ns", cfg.decay_window_ns}};
  j["normal_flow_count"] = snap.normal_flows.size();
  auto nf = nlohmann::ordered_json::array();
  for (const auto& o : snap.normal_flows)
    nf.push_back({{"x", o.x}, {"y", o.y}, {"normal", {o.normal.x(), o.normal.y()}}, {"speed", o.normal_speed},
                  {"rms_s", o.fit_residual}});
  j["normal_flows"] = nf;
  auto pf = nlohmann::ordered_json::array();
  for (const auto& p : snap.patches)
    pf.push_back({{"center", {p.center.x(), p.center.y()}}, {"flow", {p.flow.x(), p.flow.y()}}, {"stamp_ns", p.stamp.ns},
                  {"edges", p.n_edges}, {"condition", p.condition}});
  j["patches"] = pf;
  return j;
}

}  // namespace revo
