#pragma once

// Time surfaces, local plane fits for normal flow, and patch-wise full optical flow.

#include "revo/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace revo {

struct Event {
  Timestamp stamp;
  int x = 0;
  int y = 0;
  int polarity = 1;
};

struct EventFlowConfig {
  std::int64_t decay_window_ns = 20 * kNsPerMs;
  int plane_radius = 2;             // 5×5 neighbourhood
  int min_plane_pixels = 8;
  double max_plane_rms = 1e-3;      // s
  double min_grad = 1e-6;           // s/px
  bool robust_plane = false;        // one MAD pass on plane residuals
  int patch_size = 15;
  std::int64_t flow_period_ns = 10 * kNsPerMs;
  double min_normal_spread_deg = 15.0;
  double max_flow_condition = 50.0;
  int min_patch_pixels = 8;         // fresh pixels needed before a patch is fitted
};

/// Latest event timestamp per pixel.
class TimeSurface {
 public:
  static constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::min();

  TimeSurface() = default;
  TimeSurface(int width, int height) : width_(width), height_(height), stamps_(static_cast<std::size_t>(width) * height, kNever) {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::Domain, "time surface size must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Timestamp reference() const { return reference_; }
  void set_reference(Timestamp t) { reference_ = t; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::int64_t at(int x, int y) const { return stamps_[index(x, y)]; }
  void set(int x, int y, std::int64_t t_ns) { stamps_[index(x, y)] = t_ns; }

  /// Fired and no older than the decay window relative to the reference time.
  bool is_valid(int x, int y, std::int64_t decay_window_ns) const {
    const std::int64_t t = at(x, y);
    return t != kNever && t >= reference_.ns - decay_window_ns;
  }

  bool operator==(const TimeSurface&) const = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> stamps_;
  Timestamp reference_{0};
};

/// Applies time-ordered events; polarity does not matter.
inline void update_time_surface(TimeSurface& surface, std::span<const Event> events) {
  std::int64_t last = surface.reference().ns;
  for (const auto& e : events) {
    if (e.stamp.ns < last) throw Error(ErrorCode::ContractViolation, "events must be time ordered and not older than the surface");
    if (!surface.in_bounds(e.x, e.y)) throw Error(ErrorCode::Domain, "event pixel outside sensor");
    surface.set(e.x, e.y, e.stamp.ns);
    last = e.stamp.ns;
  }
  if (!events.empty()) surface.set_reference(events.back().stamp);
}

struct NormalFlowObs {
  int x = 0;
  int y = 0;
  Vec2 gradient = Vec2::Zero();  // s/px
  Vec2 normal = Vec2::Zero();    // unit, direction of edge motion (along +∇T)
  double normal_speed = 0.0;     // px/s
  double fit_residual = 0.0;     // RMS, s
  double mean_age = 0.0;         // s, mean age of the fitted pixels
  int pixels = 0;
};

namespace detail {

struct PlaneFit {
  Vec3 coeffs;  // a_x, a_y, c
  double rms;
  bool ok;
};

inline PlaneFit fit_plane(const std::vector<Vec3>& pts, const std::vector<bool>* mask) {
  Mat3 n = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  int count = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const Vec3 row(pts[i].x(), pts[i].y(), 1.0);
    n += row * row.transpose();
    b += row * pts[i].z();
    ++count;
  }
  Eigen::FullPivLU<Mat3> lu(n);
  if (count < 3 || !lu.isInvertible()) return {Vec3::Zero(), 0.0, false};
  const Vec3 c = lu.solve(b);
  double ss = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double r = c.x() * pts[i].x() + c.y() * pts[i].y() + c.z() - pts[i].z();
    ss += r * r;
  }
  return {c, std::sqrt(ss / count), true};
}

}  // namespace detail

/// Local spatio-temporal plane fit around `(x, y)`; nullopt when the fit is rejected.
inline std::optional<NormalFlowObs> fit_gradient(const TimeSurface& surface, int x, int y, const EventFlowConfig& cfg) {
  if (!surface.in_bounds(x, y) || !surface.is_valid(x, y, cfg.decay_window_ns)) return std::nullopt;
  const std::int64_t ref = surface.reference().ns;
  std::vector<Vec3> pts;
  const int r = cfg.plane_radius;
  pts.reserve(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const int px = x + dx, py = y + dy;
      if (!surface.in_bounds(px, py) || !surface.is_valid(px, py, cfg.decay_window_ns)) continue;
      // times relative to the reference keep the fit well scaled
      pts.emplace_back(dx, dy, static_cast<double>(surface.at(px, py) - ref) * 1e-9);
    }
  }
  if (static_cast<int>(pts.size()) < cfg.min_plane_pixels) return std::nullopt;

  detail::PlaneFit fit = detail::fit_plane(pts, nullptr);
  if (!fit.ok) return std::nullopt;
  std::vector<bool> mask(pts.size(), true);
  if (cfg.robust_plane) {
    std::vector<double> res(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
      res[i] = fit.coeffs.x() * pts[i].x() + fit.coeffs.y() * pts[i].y() + fit.coeffs.z() - pts[i].z();
    std::vector<double> dev(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) dev[i] = std::abs(res[i]);
    std::vector<double> sorted = dev;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double gate = 3.0 * 1.4826 * sorted[sorted.size() / 2];
    if (gate > 0.0) {
      int kept = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        mask[i] = dev[i] <= gate;
        kept += mask[i] ? 1 : 0;
      }
      if (kept < cfg.min_plane_pixels) return std::nullopt;
      fit = detail::fit_plane(pts, &mask);
      if (!fit.ok) return std::nullopt;
    }
  }

  const Vec2 grad(fit.coeffs.x(), fit.coeffs.y());
  const double g = grad.norm();
  if (fit.rms > cfg.max_plane_rms || !(g >= cfg.min_grad)) return std::nullopt;

  NormalFlowObs obs;
  obs.x = x;
  obs.y = y;
  obs.gradient = grad;
  obs.normal = grad / g;
  obs.normal_speed = 1.0 / g;
  obs.fit_residual = fit.rms;
  double age = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!mask[i]) continue;
    age -= pts[i].z();
    ++used;
  }
  obs.mean_age = age / used;
  obs.pixels = used;
  return obs;
}

struct PatchFlow {
  Vec2 center = Vec2::Zero();  // px
  Vec2 flow = Vec2::Zero();    // px/s
  Timestamp stamp;
  int n_edges = 0;
  double condition = 0.0;
};

/// Largest angle between the lines spanned by any two normals, in degrees (0..90).
inline double normal_spread_deg(std::span<const NormalFlowObs> obs) {
  double best = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (std::size_t j = i + 1; j < obs.size(); ++j) {
      const double c = std::abs(obs[i].normal.dot(obs[j].normal));
      best = std::max(best, std::acos(std::min(1.0, c)));
    }
  }
  return best * 180.0 / std::numbers::pi;
}

/// Least-squares full flow from stacked normal-flow constraints nᵀu̇ = v_n.
inline std::optional<PatchFlow> patch_full_flow(std::span<const NormalFlowObs> obs, const EventFlowConfig& cfg) {
  if (obs.size() < 2) return std::nullopt;
  if (normal_spread_deg(obs) < cfg.min_normal_spread_deg) return std::nullopt;
  Mat2 n = Mat2::Zero();
  Vec2 b = Vec2::Zero();
  Vec2 center = Vec2::Zero();
  for (const auto& o : obs) {
    n += o.normal * o.normal.transpose();
    b += o.normal * o.normal_speed;
    center += Vec2(o.x, o.y);
  }
  Eigen::SelfAdjointEigenSolver<Mat2> es(n, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);
  const double cond = lo > 0.0 ? std::sqrt(hi / lo) : std::numeric_limits<double>::infinity();
  if (!(cond <= cfg.max_flow_condition)) return std::nullopt;
  PatchFlow pf;
  pf.flow = n.ldlt().solve(b);
  pf.center = center / static_cast<double>(obs.size());
  pf.n_edges = static_cast<int>(obs.size());
  pf.condition = cond;
  return pf;
}

/// Normal flows and patch flows over the fixed patch grid of a frozen surface.
struct FlowSnapshot {
  std::vector<NormalFlowObs> normal_flows;
  std::vector<PatchFlow> patches;
};

inline FlowSnapshot compute_patch_flows(const TimeSurface& surface, const EventFlowConfig& cfg) {
  FlowSnapshot snap;
  const int ps = cfg.patch_size;
  for (int py = 0; py + ps <= surface.height(); py += ps) {
    for (int px = 0; px + ps <= surface.width(); px += ps) {
      int fresh = 0;
      for (int y = py; y < py + ps; ++y)
        for (int x = px; x < px + ps; ++x) fresh += surface.is_valid(x, y, cfg.decay_window_ns) ? 1 : 0;
      if (fresh < cfg.min_patch_pixels) continue;

      std::vector<NormalFlowObs> obs;
      for (int y = py; y < py + ps; ++y)
        for (int x = px; x < px + ps; ++x)
          if (auto o = fit_gradient(surface, x, y, cfg)) obs.push_back(*o);
      auto pf = patch_full_flow(obs, cfg);
      snap.normal_flows.insert(snap.normal_flows.end(), obs.begin(), obs.end());
      if (!pf) continue;
      pf->center = Vec2(px + 0.5 * (ps - 1), py + 0.5 * (ps - 1));
      double age = 0.0;
      for (const auto& o : obs) age += o.mean_age;
      age /= static_cast<double>(obs.size());
      pf->stamp = Timestamp{surface.reference().ns - std::llround(age * 1e9)};
      snap.patches.push_back(*pf);
    }
  }
  return snap;
}

}  // namespace revo
