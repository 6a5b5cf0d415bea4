#pragma once

// Flat `key = value` configuration with [radar], [event], [backend] and [sim] sections.
// Unknown sections or keys are errors.

#include "revo/core_types.hpp"
#include "revo/epipolar_angular.hpp"
#include "revo/estimator.hpp"
#include "revo/event_flow.hpp"
#include "revo/radar_velocity.hpp"
#include "revo/simulator.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

namespace revo {

enum class AngularSource { Auto, Measurements, Events };

struct PipelineConfig {
  RadarSolverConfig radar;
  RadarNoiseModel radar_noise;
  EventFlowConfig flow;
  EpipolarConfig epipolar;
  BackendConfig backend;
  AngularSource angular_source = AngularSource::Auto;  // Auto prefers angular.csv when present
  bool use_lever_arm = true;                           // feed ω from the back-end into v_e
  int min_rows = 8;                                    // event ω solves with fewer rows are not fed to the back-end

  void validate() const {
    radar_noise.validate();
    backend.validate();
    if (flow.patch_size < 3) throw Error(ErrorCode::ConfigError, "event.patch_size must be >= 3");
    if (flow.flow_period_ns <= 0) throw Error(ErrorCode::ConfigError, "event.flow_period_ms must be positive");
    if (flow.decay_window_ns <= 0) throw Error(ErrorCode::ConfigError, "event.decay_window_ms must be positive");
    if (min_rows < 3) throw Error(ErrorCode::ConfigError, "event.min_rows must be >= 3");
  }
};

struct Config {
  PipelineConfig pipeline;
  ScenarioConfig scenario = default_scenario();
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigValue {
  std::string text;
  std::string where;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ConfigError, where + ": " + what + " '" + text + "'");
  }
  double real() const {
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v)) fail("expected a number, got");
    return v;
  }
  long long integer() const {
    long long v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) fail("expected an integer, got");
    return v;
  }
  bool boolean() const {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    fail("expected true/false, got");
  }
  std::int64_t ms_to_ns() const { return static_cast<std::int64_t>(std::llround(real() * 1e6)); }
  double deg_to_rad() const { return real() * std::numbers::pi / 180.0; }
};

using Setter = std::function<void(Config&, const ConfigValue&)>;

inline void add_axis_keys(std::map<std::string, Setter>& t, const std::string& prefix, bool linear, int axis) {
  auto ax = [linear, axis](Config& c) -> AxisProfile& {
    return linear ? c.scenario.twist.linear[axis] : c.scenario.twist.angular[axis];
  };
  t["sim." + prefix + "_offset"] = [ax](Config& c, const ConfigValue& v) { ax(c).offset = v.real(); };
  t["sim." + prefix + "_amplitude"] = [ax](Config& c, const ConfigValue& v) { ax(c).amplitude = v.real(); };
  t["sim." + prefix + "_frequency_hz"] = [ax](Config& c, const ConfigValue& v) { ax(c).frequency_hz = v.real(); };
  t["sim." + prefix + "_phase_rad"] = [ax](Config& c, const ConfigValue& v) { ax(c).phase_rad = v.real(); };
  t["sim." + prefix + "_step_time_s"] = [ax](Config& c, const ConfigValue& v) { ax(c).step_time_s = v.real(); };
  t["sim." + prefix + "_step_delta"] = [ax](Config& c, const ConfigValue& v) { ax(c).step_delta = v.real(); };
}

inline const std::map<std::string, Setter>& config_table() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    using V = const ConfigValue&;
    // [radar]
    t["radar.range_min"] = [](Config& c, V v) { c.pipeline.radar.range_min = v.real(); };
    t["radar.max_condition"] = [](Config& c, V v) { c.pipeline.radar.max_condition = v.real(); };
    t["radar.mad_k"] = [](Config& c, V v) { c.pipeline.radar.mad_k = v.real(); };
    t["radar.irls_iters"] = [](Config& c, V v) { c.pipeline.radar.irls_iters = static_cast<int>(v.integer()); };
    t["radar.min_abs_gate"] = [](Config& c, V v) { c.pipeline.radar.min_abs_gate = v.real(); };
    t["radar.min_snr"] = [](Config& c, V v) { c.pipeline.radar.min_snr = v.real(); };
    t["radar.sigma_doppler"] = [](Config& c, V v) { c.pipeline.radar_noise.sigma_doppler = v.real(); };
    t["radar.sigma_azimuth"] = [](Config& c, V v) { c.pipeline.radar_noise.sigma_azimuth = v.real(); };
    t["radar.sigma_elevation"] = [](Config& c, V v) { c.pipeline.radar_noise.sigma_elevation = v.real(); };
    t["radar.sigma_range"] = [](Config& c, V v) { c.pipeline.radar_noise.sigma_range = v.real(); };
    // [event]
    t["event.source"] = [](Config& c, V v) {
      if (v.text == "auto") c.pipeline.angular_source = AngularSource::Auto;
      else if (v.text == "angular") c.pipeline.angular_source = AngularSource::Measurements;
      else if (v.text == "events") c.pipeline.angular_source = AngularSource::Events;
      else v.fail("expected auto, angular or events, got");
    };
    t["event.decay_window_ms"] = [](Config& c, V v) { c.pipeline.flow.decay_window_ns = v.ms_to_ns(); };
    t["event.plane_radius"] = [](Config& c, V v) { c.pipeline.flow.plane_radius = static_cast<int>(v.integer()); };
    t["event.min_plane_pixels"] = [](Config& c, V v) { c.pipeline.flow.min_plane_pixels = static_cast<int>(v.integer()); };
    t["event.max_plane_rms_ms"] = [](Config& c, V v) { c.pipeline.flow.max_plane_rms = v.real() * 1e-3; };
    t["event.min_grad"] = [](Config& c, V v) { c.pipeline.flow.min_grad = v.real(); };
    t["event.robust_plane"] = [](Config& c, V v) { c.pipeline.flow.robust_plane = v.boolean(); };
    t["event.patch_size"] = [](Config& c, V v) { c.pipeline.flow.patch_size = static_cast<int>(v.integer()); };
    t["event.flow_period_ms"] = [](Config& c, V v) { c.pipeline.flow.flow_period_ns = v.ms_to_ns(); };
    t["event.min_normal_spread_deg"] = [](Config& c, V v) { c.pipeline.flow.min_normal_spread_deg = v.real(); };
    t["event.max_flow_condition"] = [](Config& c, V v) { c.pipeline.flow.max_flow_condition = v.real(); };
    t["event.min_patch_pixels"] = [](Config& c, V v) { c.pipeline.flow.min_patch_pixels = static_cast<int>(v.integer()); };
    t["event.min_excitation"] = [](Config& c, V v) { c.pipeline.epipolar.min_excitation = v.real(); };
    t["event.min_row_norm"] = [](Config& c, V v) { c.pipeline.epipolar.min_row_norm = v.real(); };
    t["event.max_omega_condition"] = [](Config& c, V v) { c.pipeline.epipolar.max_omega_condition = v.real(); };
    t["event.outlier_passes"] = [](Config& c, V v) { c.pipeline.epipolar.outlier_passes = static_cast<int>(v.integer()); };
    t["event.mad_k"] = [](Config& c, V v) { c.pipeline.epipolar.mad_k = v.real(); };
    t["event.weight_by_condition"] = [](Config& c, V v) { c.pipeline.epipolar.weight_by_condition = v.boolean(); };
    t["event.max_seed_staleness_ms"] = [](Config& c, V v) { c.pipeline.epipolar.max_seed_staleness_ns = v.ms_to_ns(); };
    t["event.min_sigma"] = [](Config& c, V v) { c.pipeline.epipolar.min_sigma = v.real(); };
    t["event.use_lever_arm"] = [](Config& c, V v) { c.pipeline.use_lever_arm = v.boolean(); };
    t["event.min_rows"] = [](Config& c, V v) { c.pipeline.min_rows = static_cast<int>(v.integer()); };
    // [backend]
    t["backend.order"] = [](Config& c, V v) { c.pipeline.backend.order = static_cast<int>(v.integer()); };
    t["backend.knot_dt_ms"] = [](Config& c, V v) { c.pipeline.backend.knot_dt_ns = v.ms_to_ns(); };
    t["backend.window_size"] = [](Config& c, V v) { c.pipeline.backend.window_size = static_cast<int>(v.integer()); };
    t["backend.stride"] = [](Config& c, V v) { c.pipeline.backend.stride = static_cast<int>(v.integer()); };
    t["backend.prior_weight"] = [](Config& c, V v) { c.pipeline.backend.prior_weight = v.real(); };
    t["backend.init_prior_weight"] = [](Config& c, V v) { c.pipeline.backend.init_prior_weight = v.real(); };
    t["backend.prior_mode"] = [](Config& c, V v) {
      if (v.text == "fixed") c.pipeline.backend.prior_mode = PriorMode::Fixed;
      else if (v.text == "marginal") c.pipeline.backend.prior_mode = PriorMode::Marginal;
      else v.fail("expected fixed or marginal, got");
    };
    t["backend.cap_prior_by_information"] = [](Config& c, V v) { c.pipeline.backend.cap_prior_by_information = v.boolean(); };
    t["backend.max_iterations"] = [](Config& c, V v) { c.pipeline.backend.solver.max_iterations = static_cast<int>(v.integer()); };
    t["backend.rel_cost_tol"] = [](Config& c, V v) { c.pipeline.backend.solver.rel_cost_tol = v.real(); };
    t["backend.grad_tol"] = [](Config& c, V v) { c.pipeline.backend.solver.grad_tol = v.real(); };
    t["backend.output_period_ms"] = [](Config& c, V v) { c.pipeline.backend.output_period_ns = v.ms_to_ns(); };
    // [sim]
    t["sim.duration_s"] = [](Config& c, V v) { c.scenario.duration_s = v.real(); };
    t["sim.seed"] = [](Config& c, V v) { c.scenario.seed = static_cast<std::uint64_t>(v.integer()); };
    t["sim.truth_rate_hz"] = [](Config& c, V v) { c.scenario.truth_rate_hz = v.real(); };
    const char* axes = "xyz";
    for (int a = 0; a < 3; ++a) {
      add_axis_keys(t, std::string("v") + axes[a], true, a);
      add_axis_keys(t, std::string("w") + axes[a], false, a);
    }
    t["sim.radar_rate_hz"] = [](Config& c, V v) { c.scenario.radar.rate_hz = v.real(); };
    t["sim.radar_points"] = [](Config& c, V v) { c.scenario.radar.points_per_scan = static_cast<int>(v.integer()); };
    t["sim.radar_fov_azimuth_deg"] = [](Config& c, V v) { c.scenario.radar.fov_azimuth = v.deg_to_rad(); };
    t["sim.radar_fov_elevation_deg"] = [](Config& c, V v) { c.scenario.radar.fov_elevation = v.deg_to_rad(); };
    t["sim.radar_range_min"] = [](Config& c, V v) { c.scenario.radar.range_min = v.real(); };
    t["sim.radar_range_max"] = [](Config& c, V v) { c.scenario.radar.range_max = v.real(); };
    t["sim.radar_sigma_doppler"] = [](Config& c, V v) { c.scenario.radar.noise.sigma_doppler = v.real(); };
    t["sim.radar_sigma_azimuth"] = [](Config& c, V v) { c.scenario.radar.noise.sigma_azimuth = v.real(); };
    t["sim.radar_sigma_elevation"] = [](Config& c, V v) { c.scenario.radar.noise.sigma_elevation = v.real(); };
    t["sim.radar_sigma_range"] = [](Config& c, V v) { c.scenario.radar.noise.sigma_range = v.real(); };
    t["sim.radar_perturb_positions"] = [](Config& c, V v) { c.scenario.radar.perturb_positions = v.boolean(); };
    t["sim.radar_outlier_fraction"] = [](Config& c, V v) { c.scenario.radar.outlier_fraction = v.real(); };
    t["sim.radar_outlier_span"] = [](Config& c, V v) { c.scenario.radar.outlier_speed_span = v.real(); };
    t["sim.angular_rate_hz"] = [](Config& c, V v) { c.scenario.angular.rate_hz = v.real(); };
    t["sim.angular_sigma"] = [](Config& c, V v) { c.scenario.angular.sigma = v.real(); };
    t["sim.angular_exponential_gaps"] = [](Config& c, V v) { c.scenario.angular.exponential_gaps = v.boolean(); };
    t["sim.fx"] = [](Config& c, V v) { c.scenario.camera.intrinsics.fx = v.real(); };
    t["sim.fy"] = [](Config& c, V v) { c.scenario.camera.intrinsics.fy = v.real(); };
    t["sim.cx"] = [](Config& c, V v) { c.scenario.camera.intrinsics.cx = v.real(); };
    t["sim.cy"] = [](Config& c, V v) { c.scenario.camera.intrinsics.cy = v.real(); };
    t["sim.width"] = [](Config& c, V v) { c.scenario.camera.intrinsics.width = static_cast<int>(v.integer()); };
    t["sim.height"] = [](Config& c, V v) { c.scenario.camera.intrinsics.height = static_cast<int>(v.integer()); };
    t["sim.lever_x"] = [](Config& c, V v) { c.scenario.camera.extrinsics.lever_arm_radar_to_event.x() = v.real(); };
    t["sim.lever_y"] = [](Config& c, V v) { c.scenario.camera.extrinsics.lever_arm_radar_to_event.y() = v.real(); };
    t["sim.lever_z"] = [](Config& c, V v) { c.scenario.camera.extrinsics.lever_arm_radar_to_event.z() = v.real(); };
    t["sim.landmark_count"] = [](Config& c, V v) { c.scenario.camera.landmark_count = static_cast<int>(v.integer()); };
    t["sim.depth_min"] = [](Config& c, V v) { c.scenario.camera.depth_min = v.real(); };
    t["sim.depth_max"] = [](Config& c, V v) { c.scenario.camera.depth_max = v.real(); };
    t["sim.events"] = [](Config& c, V v) { c.scenario.event.enabled = v.boolean(); };
    t["sim.event_patch_size"] = [](Config& c, V v) { c.scenario.event.patch_size = static_cast<int>(v.integer()); };
    t["sim.event_patch_stride"] = [](Config& c, V v) { c.scenario.event.patch_stride = static_cast<int>(v.integer()); };
    t["sim.event_grating_spacing"] = [](Config& c, V v) { c.scenario.event.grating_spacing = v.real(); };
    t["sim.event_jitter_ms"] = [](Config& c, V v) { c.scenario.event.jitter_s = v.real() * 1e-3; };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Parses config text on top of `base`. `source` names the input in error messages.
inline Config parse_config(std::istream& in, const std::string& source, Config base = {}) {
  const auto& table = detail::config_table();
  std::string section;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    const std::string where = source + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ConfigError, where + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "radar" && section != "event" && section != "backend" && section != "sim")
        throw Error(ErrorCode::ConfigError, where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, where + ": expected key = value");
    if (section.empty()) throw Error(ErrorCode::ConfigError, where + ": key outside of a section");
    const std::string key = detail::trim(line.substr(0, eq));
    const auto it = table.find(section + "." + key);
    if (it == table.end()) throw Error(ErrorCode::ConfigError, where + ": unknown key '" + key + "' in [" + section + "]");
    it->second(base, detail::ConfigValue{detail::trim(line.substr(eq + 1)), where});
  }
  try {
    base.pipeline.validate();
    base.scenario.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, source + ": " + e.what());
  }
  return base;
}

inline Config parse_config_string(const std::string& text, const std::string& source = "<string>") {
  std::istringstream in(text);
  return parse_config(in, source);
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open config");
  return parse_config(in, path.filename().string());
}

}  // namespace revo
