#pragma once

// Dataset directory layout and CSV/JSON file formats.
//
//   radar.csv    t_ns,x_m,y_m,z_m,doppler_mps,snr_db      (one row per return)
//   events.csv   t_ns,px,py,polarity
//   angular.csv  t_ns,wx_rps,wy_rps,wz_rps,sxx,syy,szz    (optional, camera frame)
//   truth.csv    t_ns,vx,vy,vz,wx,wy,wz                  (body frame)
//   meta.txt     key=value
//
// An estimate directory holds estimate.csv and spline.json.

#include "revo/core_types.hpp"
#include "revo/epipolar_angular.hpp"
#include "revo/estimator.hpp"
#include "revo/event_flow.hpp"
#include "revo/radar_velocity.hpp"
#include "revo/simulator.hpp"
#include "revo/spline.hpp"

#include "json.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace revo {

namespace fs = std::filesystem;

inline constexpr std::string_view kRadarHeader = "t_ns,x_m,y_m,z_m,doppler_mps,snr_db";
inline constexpr std::string_view kEventsHeader = "t_ns,px,py,polarity";
inline constexpr std::string_view kAngularHeader = "t_ns,wx_rps,wy_rps,wz_rps,sxx,syy,szz";
inline constexpr std::string_view kTruthHeader = "t_ns,vx,vy,vz,wx,wy,wz";
inline constexpr std::string_view kEstimateHeader =
    "t_ns,vx,vy,vz,wx,wy,wz,var_vx,var_vy,var_vz,var_wx,var_wy,var_wz";

struct Dataset {
  std::vector<RadarScan> radar;
  std::vector<Event> events;
  std::optional<std::vector<AngularVelocityMeasurement>> angular;
  std::vector<TwistSample> truth;
  std::map<std::string, std::string> meta;
};

// ---- number formatting -------------------------------------------------------------------

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) { return std::to_string(v); }

namespace detail {

[[noreturn]] inline void data_error(const std::string& file, int line, int column, const std::string& what) {
  std::string msg = file;
  if (line > 0) msg += ":" + std::to_string(line);
  if (column > 0) msg += ": column " + std::to_string(column);
  throw Error(ErrorCode::DataError, msg + ": " + what);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, const std::string& file, int line, int column) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    data_error(file, line, column, "cannot parse '" + std::string(s) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) data_error(file, line, column, "non-finite value");
  }
  return v;
}

/// Reads a CSV with an exact header; `row` receives the split fields and the 1-based line number.
/// Rows must have non-decreasing, non-negative t_ns in the first column.
template <typename RowFn>
void read_csv(const fs::path& path, std::string_view header, RowFn&& row) {
  std::ifstream in(path);
  const std::string name = path.filename().string();
  if (!in) data_error(path.string(), 0, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) data_error(name, 1, 0, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) data_error(name, 1, 0, "header must be '" + std::string(header) + "'");
  const std::size_t ncols = split_commas(header).size();
  int lineno = 1;
  std::int64_t last_t = std::numeric_limits<std::int64_t>::min();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != ncols)
      data_error(name, lineno, 0, "expected " + std::to_string(ncols) + " columns, got " + std::to_string(fields.size()));
    const auto t = parse_field<std::int64_t>(fields[0], name, lineno, 1);
    if (t < 0) data_error(name, lineno, 1, "t_ns must be non-negative");
    if (t < last_t) data_error(name, lineno, 1, "t_ns is not monotone");
    last_t = t;
    row(fields, lineno, name);
  }
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::DataError, path.string() + ": cannot open for writing");
  return out;
}

}  // namespace detail

// ---- individual streams --------------------------------------------------------------------

inline void write_radar_csv(const fs::path& path, const std::vector<RadarScan>& scans) {
  auto out = detail::open_out(path);
  out << kRadarHeader << '\n';
  for (const auto& s : scans)
    for (const auto& p : s.points)
      out << s.stamp.ns << ',' << format_double(p.position.x()) << ',' << format_double(p.position.y()) << ','
          << format_double(p.position.z()) << ',' << format_double(p.doppler) << ',' << format_double(p.snr) << '\n';
}

inline std::vector<RadarScan> read_radar_csv(const fs::path& path) {
  std::vector<RadarScan> scans;
  detail::read_csv(path, kRadarHeader, [&](const auto& f, int line, const std::string& name) {
    const Timestamp t{detail::parse_field<std::int64_t>(f[0], name, line, 1)};
    RadarPoint p;
    p.position = Vec3(detail::parse_field<double>(f[1], name, line, 2), detail::parse_field<double>(f[2], name, line, 3),
                      detail::parse_field<double>(f[3], name, line, 4));
    p.doppler = detail::parse_field<double>(f[4], name, line, 5);
    p.snr = detail::parse_field<double>(f[5], name, line, 6);
    if (scans.empty() || scans.back().stamp != t) scans.push_back(RadarScan{t, {}});
    scans.back().points.push_back(p);
  });
  return scans;
}

inline void write_events_csv(const fs::path& path, const std::vector<Event>& events) {
  auto out = detail::open_out(path);
  out << kEventsHeader << '\n';
  std::string buf;
  for (const auto& e : events) {
    buf.clear();
    buf += std::to_string(e.stamp.ns);
    buf += ',';
    buf += std::to_string(e.x);
    buf += ',';
    buf += std::to_string(e.y);
    buf += ',';
    buf += std::to_string(e.polarity);
    buf += '\n';
    out << buf;
  }
}

inline std::vector<Event> read_events_csv(const fs::path& path) {
  std::vector<Event> events;
  detail::read_csv(path, kEventsHeader, [&](const auto& f, int line, const std::string& name) {
    Event e;
    e.stamp = Timestamp{detail::parse_field<std::int64_t>(f[0], name, line, 1)};
    e.x = detail::parse_field<int>(f[1], name, line, 2);
    e.y = detail::parse_field<int>(f[2], name, line, 3);
    e.polarity = detail::parse_field<int>(f[3], name, line, 4);
    if (e.polarity != 1 && e.polarity != -1) detail::data_error(name, line, 4, "polarity must be 1 or -1");
    events.push_back(e);
  });
  return events;
}

inline void write_angular_csv(const fs::path& path, const std::vector<AngularVelocityMeasurement>& meas) {
  auto out = detail::open_out(path);
  out << kAngularHeader << '\n';
  for (const auto& m : meas)
    out << m.stamp.ns << ',' << format_double(m.omega.x()) << ',' << format_double(m.omega.y()) << ','
        << format_double(m.omega.z()) << ',' << format_double(m.covariance(0, 0)) << ','
        << format_double(m.covariance(1, 1)) << ',' << format_double(m.covariance(2, 2)) << '\n';
}

inline std::vector<AngularVelocityMeasurement> read_angular_csv(const fs::path& path) {
  std::vector<AngularVelocityMeasurement> out;
  detail::read_csv(path, kAngularHeader, [&](const auto& f, int line, const std::string& name) {
    AngularVelocityMeasurement m;
    m.stamp = Timestamp{detail::parse_field<std::int64_t>(f[0], name, line, 1)};
    for (int a = 0; a < 3; ++a) m.omega(a) = detail::parse_field<double>(f[1 + a], name, line, 2 + a);
    m.covariance = Mat3::Zero();
    for (int a = 0; a < 3; ++a) {
      m.covariance(a, a) = detail::parse_field<double>(f[4 + a], name, line, 5 + a);
      if (!(m.covariance(a, a) > 0.0)) detail::data_error(name, line, 5 + a, "variance must be positive");
    }
    m.seed_velocity_stamp = m.stamp;
    out.push_back(m);
  });
  return out;
}

inline void write_truth_csv(const fs::path& path, const std::vector<TwistSample>& truth) {
  auto out = detail::open_out(path);
  out << kTruthHeader << '\n';
  for (const auto& s : truth) {
    out << s.stamp.ns;
    for (int a = 0; a < 3; ++a) out << ',' << format_double(s.linear(a));
    for (int a = 0; a < 3; ++a) out << ',' << format_double(s.angular(a));
    out << '\n';
  }
}

inline std::vector<TwistSample> read_truth_csv(const fs::path& path) {
  std::vector<TwistSample> out;
  detail::read_csv(path, kTruthHeader, [&](const auto& f, int line, const std::string& name) {
    TwistSample s;
    s.stamp = Timestamp{detail::parse_field<std::int64_t>(f[0], name, line, 1)};
    for (int a = 0; a < 3; ++a) s.linear(a) = detail::parse_field<double>(f[1 + a], name, line, 2 + a);
    for (int a = 0; a < 3; ++a) s.angular(a) = detail::parse_field<double>(f[4 + a], name, line, 5 + a);
    out.push_back(s);
  });
  return out;
}

inline void write_estimate_csv(const fs::path& path, const std::vector<EstimateSample>& est) {
  auto out = detail::open_out(path);
  out << kEstimateHeader << '\n';
  for (const auto& s : est) {
    out << s.stamp.ns;
    for (int a = 0; a < 3; ++a) out << ',' << format_double(s.linear(a));
    for (int a = 0; a < 3; ++a) out << ',' << format_double(s.angular(a));
    for (int a = 0; a < 3; ++a) out << ',' << format_double(s.linear_var(a));
    for (int a = 0; a < 3; ++a) out << ',' << format_double(s.angular_var(a));
    out << '\n';
  }
}

inline std::vector<EstimateSample> read_estimate_csv(const fs::path& path) {
  std::vector<EstimateSample> out;
  detail::read_csv(path, kEstimateHeader, [&](const auto& f, int line, const std::string& name) {
    EstimateSample s;
    s.stamp = Timestamp{detail::parse_field<std::int64_t>(f[0], name, line, 1)};
    for (int a = 0; a < 3; ++a) {
      s.linear(a) = detail::parse_field<double>(f[1 + a], name, line, 2 + a);
      s.angular(a) = detail::parse_field<double>(f[4 + a], name, line, 5 + a);
      s.linear_var(a) = detail::parse_field<double>(f[7 + a], name, line, 8 + a);
      s.angular_var(a) = detail::parse_field<double>(f[10 + a], name, line, 11 + a);
    }
    out.push_back(s);
  });
  return out;
}

inline std::vector<TwistSample> to_twist_samples(const std::vector<EstimateSample>& est) {
  std::vector<TwistSample> out;
  out.reserve(est.size());
  for (const auto& e : est) out.push_back({e.stamp, e.linear, e.angular});
  return out;
}

// ---- meta ----------------------------------------------------------------------------------

inline void write_meta(const fs::path& path, const std::map<std::string, std::string>& meta) {
  auto out = detail::open_out(path);
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
}

inline std::map<std::string, std::string> read_meta(const fs::path& path) {
  std::ifstream in(path);
  if (!in) detail::data_error(path.string(), 0, 0, "cannot open file");
  std::map<std::string, std::string> meta;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::data_error(path.filename().string(), lineno, 0, "expected key=value");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

inline std::map<std::string, std::string> meta_from_scenario(const ScenarioConfig& sc) {
  const auto& in = sc.camera.intrinsics;
  const auto& ex = sc.camera.extrinsics;
  std::map<std::string, std::string> m;
  m["fx"] = format_double(in.fx);
  m["fy"] = format_double(in.fy);
  m["cx"] = format_double(in.cx);
  m["cy"] = format_double(in.cy);
  m["width"] = std::to_string(in.width);
  m["height"] = std::to_string(in.height);
  m["extrinsics_qw"] = format_double(ex.rotation_radar_to_event.w());
  m["extrinsics_qx"] = format_double(ex.rotation_radar_to_event.x());
  m["extrinsics_qy"] = format_double(ex.rotation_radar_to_event.y());
  m["extrinsics_qz"] = format_double(ex.rotation_radar_to_event.z());
  m["lever_x"] = format_double(ex.lever_arm_radar_to_event.x());
  m["lever_y"] = format_double(ex.lever_arm_radar_to_event.y());
  m["lever_z"] = format_double(ex.lever_arm_radar_to_event.z());
  m["duration_s"] = format_double(sc.duration_s);
  m["seed"] = std::to_string(sc.seed);
  return m;
}

namespace detail {

inline double meta_double(const std::map<std::string, std::string>& meta, const std::string& key, double fallback) {
  const auto it = meta.find(key);
  if (it == meta.end()) return fallback;
  return parse_field<double>(it->second, "meta.txt", 0, 0);
}

}  // namespace detail

inline CameraIntrinsics intrinsics_from_meta(const std::map<std::string, std::string>& meta) {
  CameraIntrinsics in;
  in.fx = detail::meta_double(meta, "fx", in.fx);
  in.fy = detail::meta_double(meta, "fy", in.fy);
  in.cx = detail::meta_double(meta, "cx", in.cx);
  in.cy = detail::meta_double(meta, "cy", in.cy);
  in.width = static_cast<int>(detail::meta_double(meta, "width", in.width));
  in.height = static_cast<int>(detail::meta_double(meta, "height", in.height));
  in.validate();
  return in;
}

inline Extrinsics extrinsics_from_meta(const std::map<std::string, std::string>& meta) {
  Extrinsics ex{forward_looking_camera_rotation(), Vec3::Zero()};
  if (meta.count("extrinsics_qw"))
    ex.rotation_radar_to_event = Rotation(detail::meta_double(meta, "extrinsics_qw", 1.0), detail::meta_double(meta, "extrinsics_qx", 0.0),
                                          detail::meta_double(meta, "extrinsics_qy", 0.0), detail::meta_double(meta, "extrinsics_qz", 0.0));
  ex.lever_arm_radar_to_event = Vec3(detail::meta_double(meta, "lever_x", 0.0), detail::meta_double(meta, "lever_y", 0.0),
                                     detail::meta_double(meta, "lever_z", 0.0));
  return ex;
}

// ---- whole dataset -------------------------------------------------------------------------

inline void write_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  write_radar_csv(dir / "radar.csv", ds.radar);
  write_events_csv(dir / "events.csv", ds.events);
  if (ds.angular) write_angular_csv(dir / "angular.csv", *ds.angular);
  write_truth_csv(dir / "truth.csv", ds.truth);
  write_meta(dir / "meta.txt", ds.meta);
}

inline Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::DataError, dir.string() + ": not a dataset directory");
  Dataset ds;
  ds.radar = read_radar_csv(dir / "radar.csv");
  ds.events = read_events_csv(dir / "events.csv");
  if (fs::exists(dir / "angular.csv")) ds.angular = read_angular_csv(dir / "angular.csv");
  if (fs::exists(dir / "truth.csv")) ds.truth = read_truth_csv(dir / "truth.csv");
  if (fs::exists(dir / "meta.txt")) ds.meta = read_meta(dir / "meta.txt");
  return ds;
}

/// Full synthetic dataset: radar scans, angular measurements, events when enabled, truth and meta.
inline Dataset simulate_dataset(const ScenarioConfig& sc) {
  sc.validate();
  Dataset ds;
  ds.radar = gen_radar_scans(sc).scans;
  ds.angular = gen_angular_measurements(sc);
  if (sc.event.enabled) ds.events = gen_events(sc);
  ds.truth = gen_ground_truth(sc, false).twist;
  ds.meta = meta_from_scenario(sc);
  return ds;
}

// ---- spline sidecar ------------------------------------------------------------------------

inline nlohmann::ordered_json spline_to_json(const TwistSpline& s) {
  nlohmann::ordered_json j;
  j["order"] = s.order();
  j["knot_dt_ns"] = s.knot_dt_ns();
  j["t0_ns"] = s.t0_ns();
  auto pts = [](const std::vector<Vec3>& c) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& v : c) arr.push_back({v.x(), v.y(), v.z()});
    return arr;
  };
  j["linear_control"] = pts(s.linear_control());
  j["angular_control"] = pts(s.angular_control());
  return j;
}

inline TwistSpline spline_from_json(const nlohmann::json& j) {
  try {
    TwistSpline s(j.at("order").get<int>(), j.at("knot_dt_ns").get<std::int64_t>(), j.at("t0_ns").get<std::int64_t>());
    const auto& lin = j.at("linear_control");
    const auto& ang = j.at("angular_control");
    if (lin.size() != ang.size()) throw Error(ErrorCode::DataError, "spline.json: control lists differ in length");
    for (std::size_t i = 0; i < lin.size(); ++i)
      s.push_back(Vec3(lin[i].at(0).get<double>(), lin[i].at(1).get<double>(), lin[i].at(2).get<double>()),
                  Vec3(ang[i].at(0).get<double>(), ang[i].at(1).get<double>(), ang[i].at(2).get<double>()));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::DataError, std::string("spline.json: ") + e.what());
  }
}

inline void write_spline_json(const fs::path& path, const TwistSpline& s) {
  auto out = detail::open_out(path);
  out << spline_to_json(s).dump(2) << '\n';
}

inline TwistSpline read_spline_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::DataError, path.string() + ": cannot open file");
  try {
    return spline_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::DataError, path.string() + ": " + e.what());
  }
}

}  // namespace revo
