#pragma once

// Sliding-window least-squares fusion of radar velocities and angular velocities into a TwistSpline.

#include "revo/core_types.hpp"
#include "revo/epipolar_angular.hpp"
#include "revo/radar_velocity.hpp"
#include "revo/spline.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace revo {

enum class ResidualKind { Radar, Event, Prior };

/// d(residual)/d(control point), a 3×3 block on one linear or angular control point.
struct JacobianBlock {
  bool angular = false;
  int index = 0;  // global control index
  Mat3 d = Mat3::Zero();
};

struct Residual {
  ResidualKind kind = ResidualKind::Radar;
  Vec3 value = Vec3::Zero();
  Mat3 information = Mat3::Identity();
  std::vector<JacobianBlock> blocks;
  bool extrapolated = false;

  double cost() const { return value.dot(information * value); }
};

inline Mat3 information_of(const Cov3& cov) {
  Eigen::LDLT<Mat3> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
    throw Error(ErrorCode::Domain, "measurement covariance is not positive definite");
  Mat3 info = ldlt.solve(Mat3::Identity());
  return 0.5 * (info + info.transpose());
}

namespace detail {

inline SplineJacobian measurement_weights(Timestamp stamp, const TwistSpline& spline, bool* extrapolated) {
  *extrapolated = !spline.in_domain(stamp.ns);
  return spline.eval_jacobian(stamp, true);
}

}  // namespace detail

/// r = measured − predicted linear velocity. Stamps up to one knot past the domain end are
/// extrapolated and flagged; anything further throws OutOfDomain so the caller can defer it.
inline Residual radar_residual(const VelocityMeasurement& meas, const TwistSpline& spline) {
  Residual r;
  r.kind = ResidualKind::Radar;
  const SplineJacobian jac = detail::measurement_weights(meas.stamp, spline, &r.extrapolated);
  r.value = meas.velocity - TwistSpline::apply(jac, spline.linear_control());
  r.information = information_of(meas.covariance);
  for (std::size_t j = 0; j < jac.weights.size(); ++j)
    r.blocks.push_back({false, jac.first_index + static_cast<int>(j), -jac.weights[j] * Mat3::Identity()});
  return r;
}

/// r = measured − R_ER ω_body(t), both in the camera frame.
inline Residual event_residual(const AngularVelocityMeasurement& meas, const TwistSpline& spline, const Extrinsics& ext) {
  Residual r;
  r.kind = ResidualKind::Event;
  const SplineJacobian jac = detail::measurement_weights(meas.stamp, spline, &r.extrapolated);
  const Mat3 rot = ext.rotation_radar_to_event.matrix();
  r.value = meas.omega - rot * TwistSpline::apply(jac, spline.angular_control());
  r.information = information_of(meas.covariance);
  for (std::size_t j = 0; j < jac.weights.size(); ++j)
    r.blocks.push_back({true, jac.first_index + static_cast<int>(j), -jac.weights[j] * rot});
  return r;
}

/// Value a shared control point held after the previous window's solve.
struct PriorEntry {
  bool angular = false;
  int index = 0;
  Vec3 value = Vec3::Zero();
  Vec3 weight = Vec3::Constant(1e2);  // per axis
};

inline Residual prior_residual(const PriorEntry& prior, const TwistSpline& spline) {
  Residual r;
  r.kind = ResidualKind::Prior;
  const auto& ctrl = prior.angular ? spline.angular_control() : spline.linear_control();
  r.value = ctrl.at(static_cast<std::size_t>(prior.index)) - prior.value;
  r.information = prior.weight.asDiagonal();
  r.blocks.push_back({prior.angular, prior.index, Mat3::Identity()});
  return r;
}

/// Gaussian prior over a contiguous run of control points, cost (x − mean)ᵀ information (x − mean)
/// with x ordered as the linear points followed by the angular points.
struct DensePrior {
  int first_index = 0;
  int count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd information;

  Eigen::VectorXd delta(const TwistSpline& spline) const {
    Eigen::VectorXd d(6 * count);
    for (int i = 0; i < count; ++i) {
      d.segment<3>(3 * i) = spline.linear_control().at(static_cast<std::size_t>(first_index + i));
      d.segment<3>(3 * (count + i)) = spline.angular_control().at(static_cast<std::size_t>(first_index + i));
    }
    return d - mean;
  }
};

struct SlidingWindowProblem {
  int window_index = 0;
  int first_control = 0;
  int size = 8;
  TwistSpline spline;
  Extrinsics extrinsics;
  std::vector<VelocityMeasurement> radar;
  std::vector<AngularVelocityMeasurement> angular;
  std::vector<PriorEntry> prior;
  std::optional<DensePrior> dense_prior;
};

inline std::vector<Residual> prior_residuals(const SlidingWindowProblem& problem) {
  std::vector<Residual> out;
  out.reserve(problem.prior.size());
  for (const auto& p : problem.prior) out.push_back(prior_residual(p, problem.spline));
  return out;
}

struct SolverConfig {
  int max_iterations = 50;
  double rel_cost_tol = 1e-8;
  double grad_tol = 1e-10;
  double initial_lambda = 1e-4;
  int stall_limit = 5;
};

enum class Termination { CostChange, Gradient, MaxIterations, Stalled, NoFactors };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::CostChange: return "cost_change";
    case Termination::Gradient: return "gradient";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::Stalled: return "stalled";
    case Termination::NoFactors: return "no_factors";
  }
  return "unknown";
}

struct SolverReport {
  int window_index = 0;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  Termination termination = Termination::NoFactors;
  double radar_cost = 0.0;
  double event_cost = 0.0;
  double prior_cost = 0.0;
  int n_radar = 0;
  int n_event = 0;
  int n_prior = 0;
};

inline std::string format_report(const SolverReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "window=%d iters=%d cost0=%.6g cost=%.6g alpha_r=%.6g alpha_e=%.6g alpha_prior=%.6g n_r=%d n_e=%d term=%s",
                r.window_index, r.iterations, r.initial_cost, r.final_cost, r.radar_cost, r.event_cost, r.prior_cost,
                r.n_radar, r.n_event, to_string(r.termination));
  return buf;
}

struct WindowSolution {
  TwistSpline spline;
  SolverReport report;
  Eigen::MatrixXd covariance;  // 6m × 6m, linear points first; rows of fixed points are zero
  std::vector<bool> fixed;     // per local parameter block (2m)
};

namespace detail {

struct WindowResiduals {
  std::vector<Residual> all;
  Eigen::VectorXd dense_delta;
  double radar = 0.0, event = 0.0, prior = 0.0;
  double total() const { return radar + event + prior; }
};

inline WindowResiduals evaluate_window(const SlidingWindowProblem& p, const TwistSpline& spline) {
  WindowResiduals w;
  w.all.reserve(p.radar.size() + p.angular.size() + p.prior.size());
  for (const auto& m : p.radar) {
    w.all.push_back(radar_residual(m, spline));
    w.radar += w.all.back().cost();
  }
  for (const auto& m : p.angular) {
    w.all.push_back(event_residual(m, spline, p.extrinsics));
    w.event += w.all.back().cost();
  }
  for (const auto& pr : p.prior) {
    w.all.push_back(prior_residual(pr, spline));
    w.prior += w.all.back().cost();
  }
  if (p.dense_prior) {
    w.dense_delta = p.dense_prior->delta(spline);
    w.prior += w.dense_delta.dot(p.dense_prior->information * w.dense_delta);
  }
  return w;
}

/// Local block index (0..2m-1) of a Jacobian block, or -1 when outside the window.
inline int local_block(const JacobianBlock& b, const SlidingWindowProblem& p) {
  const int local = b.index - p.first_control;
  if (local < 0 || local >= p.size) return -1;
  return b.angular ? p.size + local : local;
}

/// Local parameter index of entry `i` of a dense prior vector, or -1 outside the window.
inline int dense_local_index(const DensePrior& d, int i, const SlidingWindowProblem& p) {
  const bool angular = i >= 3 * d.count;
  const int rem = angular ? i - 3 * d.count : i;
  const int local = d.first_index + rem / 3 - p.first_control;
  if (local < 0 || local >= p.size) return -1;
  return 3 * (angular ? p.size + local : local) + rem % 3;
}

inline void normal_equations(const SlidingWindowProblem& p, const WindowResiduals& w, Eigen::MatrixXd& h,
                             Eigen::VectorXd& g) {
  const int dim = 6 * p.size;
  h.setZero(dim, dim);
  g.setZero(dim);
  if (p.dense_prior) {
    const auto& d = *p.dense_prior;
    const Eigen::VectorXd gd = d.information * w.dense_delta;
    for (int i = 0; i < 6 * d.count; ++i) {
      const int li = dense_local_index(d, i, p);
      if (li < 0) continue;
      g(li) += gd(i);
      for (int j = 0; j < 6 * d.count; ++j)
        if (const int lj = dense_local_index(d, j, p); lj >= 0) h(li, lj) += d.information(i, j);
    }
  }
  for (const auto& r : w.all) {
    for (const auto& a : r.blocks) {
      const int ia = local_block(a, p);
      if (ia < 0) continue;
      const Eigen::Matrix3d wa = a.d.transpose() * r.information;
      g.segment<3>(3 * ia) += wa * r.value;
      for (const auto& b : r.blocks) {
        const int ib = local_block(b, p);
        if (ib < 0) continue;
        h.block<3, 3>(3 * ia, 3 * ib) += wa * b.d;
      }
    }
  }
}

inline void apply_step(TwistSpline& spline, const SlidingWindowProblem& p, const Eigen::VectorXd& step) {
  for (int i = 0; i < p.size; ++i) {
    spline.linear_control()[p.first_control + i] += step.segment<3>(3 * i);
    spline.angular_control()[p.first_control + i] += step.segment<3>(3 * (p.size + i));
  }
}

}  // namespace detail

/// Levenberg–Marquardt over the window's control points. Control points no factor touches stay fixed.
inline WindowSolution solve_window(const SlidingWindowProblem& problem, const SolverConfig& cfg = {}) {
  const int m = problem.size;
  const int dim = 6 * m;
  if (problem.first_control < 0 || problem.first_control + m > problem.spline.size())
    throw Error(ErrorCode::Domain, "window exceeds spline control points");

  WindowSolution sol;
  sol.spline = problem.spline;
  sol.report.window_index = problem.window_index;
  sol.report.n_radar = static_cast<int>(problem.radar.size());
  sol.report.n_event = static_cast<int>(problem.angular.size());
  sol.report.n_prior = static_cast<int>(problem.prior.size()) + (problem.dense_prior ? 2 * problem.dense_prior->count : 0);

  detail::WindowResiduals res = detail::evaluate_window(problem, sol.spline);
  sol.fixed.assign(static_cast<std::size_t>(2 * m), true);
  // A parameter is free only if some factor carries information about it; a stamp exactly on a
  // knot gives the newest point a zero blending weight.
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  detail::normal_equations(problem, res, h, g);
  const double scale = std::max(1.0, h.diagonal().maxCoeff());
  std::vector<int> free_idx;
  for (int blk = 0; blk < 2 * m; ++blk)
    for (int a = 0; a < 3; ++a)
      if (h(3 * blk + a, 3 * blk + a) > 1e-14 * scale) {
        free_idx.push_back(3 * blk + a);
        sol.fixed[blk] = false;
      }
  const int nf = static_cast<int>(free_idx.size());

  double cost = res.total();
  sol.report.initial_cost = cost;
  sol.report.termination = Termination::MaxIterations;
  if (nf == 0) sol.report.termination = Termination::NoFactors;

  double lambda = cfg.initial_lambda;
  int stalls = 0;
  for (int it = 0; it < cfg.max_iterations && nf > 0; ++it) {
    detail::normal_equations(problem, res, h, g);
    Eigen::MatrixXd hf(nf, nf);
    Eigen::VectorXd gf(nf);
    for (int i = 0; i < nf; ++i) {
      gf(i) = g(free_idx[i]);
      for (int j = 0; j < nf; ++j) hf(i, j) = h(free_idx[i], free_idx[j]);
    }
    if (gf.norm() < cfg.grad_tol) {
      sol.report.termination = Termination::Gradient;
      break;
    }
    Eigen::MatrixXd damped = hf;
    for (int i = 0; i < nf; ++i) damped(i, i) += lambda * std::max(hf(i, i), 1e-12);
    const Eigen::VectorXd step_f = damped.ldlt().solve(-gf);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < nf; ++i) step(free_idx[i]) = step_f(i);

    TwistSpline candidate = sol.spline;
    detail::apply_step(candidate, problem, step);
    detail::WindowResiduals cand_res = detail::evaluate_window(problem, candidate);
    const double new_cost = cand_res.total();
    sol.report.iterations = it + 1;
    const double rel = (cost - new_cost) / std::max(cost, 1e-300);
    if (new_cost < cost) {
      sol.spline = std::move(candidate);
      res = std::move(cand_res);
      cost = new_cost;
      lambda = std::max(lambda * 0.1, 1e-12);
      stalls = 0;
    } else {
      lambda *= 10.0;
      ++stalls;
    }
    if (std::abs(rel) < cfg.rel_cost_tol || cost == 0.0) {
      sol.report.termination = Termination::CostChange;
      break;
    }
    if (stalls >= cfg.stall_limit) {
      sol.report.termination = Termination::Stalled;
      break;
    }
  }

  sol.report.final_cost = cost;
  sol.report.radar_cost = res.radar;
  sol.report.event_cost = res.event;
  sol.report.prior_cost = res.prior;

  sol.covariance = Eigen::MatrixXd::Zero(dim, dim);
  if (nf > 0) {
    detail::normal_equations(problem, res, h, g);
    Eigen::MatrixXd hf(nf, nf);
    for (int i = 0; i < nf; ++i)
      for (int j = 0; j < nf; ++j) hf(i, j) = h(free_idx[i], free_idx[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hf);
    Eigen::VectorXd inv_ev = es.eigenvalues();
    const double cut = 1e-12 * std::max(1.0, inv_ev.maxCoeff());
    for (int i = 0; i < nf; ++i) inv_ev(i) = inv_ev(i) > cut ? 1.0 / inv_ev(i) : 0.0;
    const Eigen::MatrixXd cov_f = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
    for (int i = 0; i < nf; ++i)
      for (int j = 0; j < nf; ++j) sol.covariance(free_idx[i], free_idx[j]) = cov_f(i, j);
  }
  return sol;
}

namespace detail {

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  const double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (int i = 0; i < ev.size(); ++i) ev(i) = ev(i) > cut ? 1.0 / ev(i) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Prior on the window's control points after its first `drop` points leave, obtained by
/// eliminating those points from the factors that will not reappear in the next window: the
/// window's own priors and the measurements stamped before `keep_from_ns`. All residuals are linear
/// in the control points, so this is exact.
inline DensePrior marginalize_window(const SlidingWindowProblem& problem, const TwistSpline& solved, int drop,
                                     std::int64_t keep_from_ns) {
  const int m = problem.size;
  if (drop <= 0 || drop >= m) throw Error(ErrorCode::Domain, "marginalization must drop between 1 and m-1 points");
  SlidingWindowProblem leaving = problem;
  leaving.spline = solved;
  std::erase_if(leaving.radar, [&](const VelocityMeasurement& r) { return r.stamp.ns >= keep_from_ns; });
  std::erase_if(leaving.angular, [&](const AngularVelocityMeasurement& r) { return r.stamp.ns >= keep_from_ns; });
  const detail::WindowResiduals res = detail::evaluate_window(leaving, solved);
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  detail::normal_equations(leaving, res, h, g);

  const int keep = m - drop;
  std::vector<int> di, ki;  // local parameter indices, dense prior order for the kept ones
  for (int part = 0; part < 2; ++part)
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < 3; ++a) (i < drop ? di : ki).push_back(3 * (part * m + i) + a);
  auto sub = [&](const std::vector<int>& r, const std::vector<int>& c) {
    Eigen::MatrixXd out(r.size(), c.size());
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = h(r[i], c[j]);
    return out;
  };
  auto subv = [&](const std::vector<int>& r) {
    Eigen::VectorXd out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out(i) = g(r[i]);
    return out;
  };
  const Eigen::MatrixXd hdd_inv = detail::pseudo_inverse(sub(di, di));
  const Eigen::MatrixXd hkd = sub(ki, di);
  Eigen::MatrixXd lambda = sub(ki, ki) - hkd * hdd_inv * hkd.transpose();
  lambda = 0.5 * (lambda + lambda.transpose()).eval();
  const Eigen::VectorXd b = subv(ki) - hkd * hdd_inv * subv(di);

  DensePrior out;
  out.first_index = problem.first_control + drop;
  out.count = keep;
  Eigen::VectorXd x(6 * keep);
  for (int i = 0; i < keep; ++i) {
    x.segment<3>(3 * i) = solved.linear_control()[out.first_index + i];
    x.segment<3>(3 * (keep + i)) = solved.angular_control()[out.first_index + i];
  }
  out.mean = x - detail::pseudo_inverse(lambda) * b;
  out.information = lambda;
  return out;
}

enum class PriorMode { Fixed, Marginal };

struct BackendConfig {
  int order = 4;
  std::int64_t knot_dt_ns = 200 * kNsPerMs;  // two or more radar scans per knot at 10 Hz
  int window_size = 8;
  int stride = 2;
  double prior_weight = 1e2;
  double init_prior_weight = 1.0;  // window 0, towards the front-end seeded values
  PriorMode prior_mode = PriorMode::Marginal;
  bool cap_prior_by_information = true;  // fixed mode: per axis, prior weight ≤ marginal information of the last solve
  SolverConfig solver;
  std::int64_t output_period_ns = 10 * kNsPerMs;

  void validate() const {
    if (order < 2) throw Error(ErrorCode::ConfigError, "backend.order must be >= 2");
    if (knot_dt_ns <= 0) throw Error(ErrorCode::ConfigError, "backend.knot_dt_ms must be positive");
    if (window_size < order) throw Error(ErrorCode::ConfigError, "backend.window_size must be >= order");
    if (stride < 1 || stride >= window_size) throw Error(ErrorCode::ConfigError, "backend.stride must be in [1, window_size)");
    if (!(prior_weight >= 0.0) || !(init_prior_weight >= 0.0)) throw Error(ErrorCode::ConfigError, "prior weights must be >= 0");
    if (output_period_ns <= 0) throw Error(ErrorCode::ConfigError, "backend.output_period_ms must be positive");
  }
};

struct EstimateSample {
  Timestamp stamp;
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
  Vec3 linear_var = Vec3::Zero();
  Vec3 angular_var = Vec3::Zero();
};

/// Streaming fixed-lag smoother. Feed time-ordered measurements per stream, call update()
/// as data arrives and finish() at end of stream.
class SlidingWindowEstimator {
 public:
  SlidingWindowEstimator(BackendConfig cfg, Extrinsics ext) : cfg_(cfg), ext_(ext) { cfg_.validate(); }

  std::function<void(const SolverReport&)> on_report;
  std::function<void(const std::string&)> on_warning;

  void add_radar(const VelocityMeasurement& m) {
    if (!radar_.empty() && m.stamp < radar_.back().stamp)
      throw Error(ErrorCode::ContractViolation, "radar measurements must be time ordered");
    radar_.push_back(m);
    watermark_ = std::max(watermark_, m.stamp.ns);
  }

  void add_angular(const AngularVelocityMeasurement& m) {
    if (!angular_.empty() && m.stamp < angular_.back().stamp)
      throw Error(ErrorCode::ContractViolation, "angular measurements must be time ordered");
    angular_.push_back(m);
    watermark_ = std::max(watermark_, m.stamp.ns);
  }

  /// Solves every window whose time span is complete. Returns the number of windows processed.
  int update(bool flush = false) {
    if (!initialized_ && !initialize()) return 0;
    int processed = 0;
    while (true) {
      const std::int64_t begin = window_begin_ns(), end = window_end_ns();
      drop_before(begin);
      const bool complete = watermark_ >= end;
      const bool pending = flush && has_data_from(begin);
      if (!complete && !pending) break;
      if (window_index_ == 0) seed_first_window();
      process_window(begin, end);
      ++processed;
      slide();
    }
    return processed;
  }

  void finish() { update(true); }

  bool initialized() const { return initialized_; }
  bool has_solution() const { return solved_end_ns_.has_value(); }
  const TwistSpline& spline() const { return spline_; }
  const std::vector<SolverReport>& reports() const { return reports_; }
  int dropped_measurements() const { return dropped_; }
  int skipped_windows() const { return skipped_; }

  bool segment_valid(int segment) const {
    return segment >= 0 && segment < static_cast<int>(segment_cov_.size()) && segment_cov_[segment].has_value();
  }

  /// Body angular velocity of the latest solution, held constant past its end.
  std::optional<Vec3> angular_hint(Timestamp t) const {
    if (!solved_end_ns_) return std::nullopt;
    const std::int64_t clamped = std::clamp(t.ns, spline_.domain_begin_ns(), *solved_end_ns_);
    return spline_.eval_angular(Timestamp{clamped});
  }

  /// Samples on the global grid of `period_ns` over the solved span, skipping invalid segments.
  std::vector<EstimateSample> estimates(std::int64_t period_ns) const {
    std::vector<EstimateSample> out;
    if (!solved_end_ns_ || period_ns <= 0) return out;
    const std::int64_t begin = spline_.domain_begin_ns();
    std::int64_t t = begin >= 0 ? ((begin + period_ns - 1) / period_ns) * period_ns : (begin / period_ns) * period_ns;
    const std::int64_t last = std::min(*solved_end_ns_, last_stamp_ns_);
    for (; t <= last; t += period_ns) {
      const int seg = segment_of(t);
      if (!segment_valid(seg)) continue;
      const SplineJacobian jac = spline_.eval_jacobian(Timestamp{t});
      EstimateSample s;
      s.stamp = Timestamp{t};
      s.linear = TwistSpline::apply(jac, spline_.linear_control());
      s.angular = TwistSpline::apply(jac, spline_.angular_control());
      const auto& cov = *segment_cov_[seg];
      const int k = cfg_.order;
      for (int a = 0; a < 3; ++a) {
        double vv = 0.0, ww = 0.0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            vv += jac.weights[i] * jac.weights[j] * cov.linear(3 * i + a, 3 * j + a);
            ww += jac.weights[i] * jac.weights[j] * cov.angular(3 * i + a, 3 * j + a);
          }
        s.linear_var(a) = std::max(vv, 0.0);
        s.angular_var(a) = std::max(ww, 0.0);
      }
      out.push_back(s);
    }
    return out;
  }

  /// Problem for the current window, as update() would build it.
  SlidingWindowProblem current_problem() const {
    SlidingWindowProblem p;
    p.window_index = window_index_;
    p.first_control = start_;
    p.size = cfg_.window_size;
    p.spline = spline_;
    p.extrinsics = ext_;
    const std::int64_t begin = window_begin_ns(), end = window_end_ns();
    for (const auto& m : radar_)
      if (m.stamp.ns >= begin && m.stamp.ns < end) p.radar.push_back(m);
    for (const auto& m : angular_)
      if (m.stamp.ns >= begin && m.stamp.ns < end) p.angular.push_back(m);
    p.prior = prior_;
    p.dense_prior = dense_prior_;
    return p;
  }

 private:
  struct SegmentCovariance {
    Eigen::MatrixXd linear;   // 3k × 3k
    Eigen::MatrixXd angular;  // 3k × 3k
  };

  std::int64_t window_begin_ns() const { return spline_.segment_begin_ns(start_ + cfg_.order - 1); }
  std::int64_t window_end_ns() const { return spline_.segment_begin_ns(start_ + cfg_.window_size); }

  int segment_of(std::int64_t t) const {
    const std::int64_t rel = t - spline_.t0_ns();
    int s = static_cast<int>(rel >= 0 ? rel / cfg_.knot_dt_ns : -((-rel + cfg_.knot_dt_ns - 1) / cfg_.knot_dt_ns));
    return std::clamp(s, cfg_.order - 1, spline_.size() - 1);
  }

  bool initialize() {
    std::optional<std::int64_t> first;
    if (!radar_.empty()) first = radar_.front().stamp.ns;
    if (!angular_.empty()) first = first ? std::min(*first, angular_.front().stamp.ns) : angular_.front().stamp.ns;
    if (!first) return false;
    spline_ = TwistSpline(cfg_.order, cfg_.knot_dt_ns, *first - (cfg_.order - 1) * cfg_.knot_dt_ns);
    start_ = 0;
    window_index_ = 0;
    seed_first_window();
    initialized_ = true;
    return true;
  }

  // Window 0 starts from, and is weakly tied to, the earliest buffered measurement of each stream.
  // Called again right before the first solve, when both streams have had time to arrive.
  void seed_first_window() {
    const Vec3 v0 = radar_.empty() ? Vec3::Zero() : radar_.front().velocity;
    const Vec3 w0 = angular_.empty() ? Vec3::Zero()
                                     : Vec3(ext_.rotation_radar_to_event.inverse() * angular_.front().omega);
    spline_.resize(0);
    spline_.resize(cfg_.window_size, v0, w0);
    prior_.clear();
    for (int i = 0; i < cfg_.window_size; ++i) {
      prior_.push_back({false, i, v0, Vec3::Constant(cfg_.init_prior_weight)});
      prior_.push_back({true, i, w0, Vec3::Constant(cfg_.init_prior_weight)});
    }
  }

  void drop_before(std::int64_t begin) {
    while (!radar_.empty() && radar_.front().stamp.ns < begin) {
      radar_.pop_front();
      if (!seen_window_) ++dropped_;
    }
    while (!angular_.empty() && angular_.front().stamp.ns < begin) {
      angular_.pop_front();
      if (!seen_window_) ++dropped_;
    }
  }

  bool has_data_from(std::int64_t begin) const {
    return (!radar_.empty() && radar_.back().stamp.ns >= begin) || (!angular_.empty() && angular_.back().stamp.ns >= begin);
  }

  void process_window(std::int64_t begin, std::int64_t end) {
    seen_window_ = true;
    SlidingWindowProblem problem = current_problem();
    const std::int64_t keep_from = spline_.segment_begin_ns(start_ + cfg_.stride + cfg_.order - 1);
    if (problem.radar.empty() && problem.angular.empty()) {
      ++skipped_;
      last_marginal_info_.clear();
      if (cfg_.prior_mode == PriorMode::Marginal)
        next_dense_prior_ = marginalize_window(problem, spline_, cfg_.stride, keep_from);
      if (on_warning)
        on_warning("window " + std::to_string(window_index_) + " has no measurements in [" + std::to_string(begin) + ", " +
                   std::to_string(end) + ") ns; skipped");
      return;
    }
    for (const auto& m : problem.radar) last_stamp_ns_ = std::max(last_stamp_ns_, m.stamp.ns);
    for (const auto& m : problem.angular) last_stamp_ns_ = std::max(last_stamp_ns_, m.stamp.ns);

    WindowSolution sol = solve_window(problem, cfg_.solver);
    if (cfg_.prior_mode == PriorMode::Marginal)
      next_dense_prior_ = marginalize_window(problem, sol.spline, cfg_.stride, keep_from);
    spline_ = std::move(sol.spline);
    reports_.push_back(sol.report);
    if (on_report) on_report(sol.report);

    const int k = cfg_.order, m = cfg_.window_size;
    if (static_cast<int>(segment_cov_.size()) < start_ + m) segment_cov_.resize(static_cast<std::size_t>(start_ + m));
    for (int seg = start_ + k - 1; seg < start_ + m; ++seg) {
      const int first_local = seg - k + 1 - start_;
      SegmentCovariance sc;
      sc.linear = sol.covariance.block(3 * first_local, 3 * first_local, 3 * k, 3 * k);
      sc.angular = sol.covariance.block(3 * (m + first_local), 3 * (m + first_local), 3 * k, 3 * k);
      segment_cov_[seg] = std::move(sc);
    }
    solved_end_ns_ = end;
    last_marginal_info_.assign(static_cast<std::size_t>(6 * m), std::numeric_limits<double>::infinity());
    for (int i = 0; i < 6 * m; ++i) {
      const double var = sol.covariance(i, i);
      last_marginal_info_[i] = var > 0.0 ? 1.0 / var : 0.0;
    }
  }

  void slide() {
    const int m = cfg_.window_size;
    const int last = start_ + m - 1;
    const Vec3 v_last = spline_.linear_control()[last];
    const Vec3 w_last = spline_.angular_control()[last];
    const int new_start = start_ + cfg_.stride;
    prior_.clear();
    dense_prior_.reset();
    if (cfg_.prior_mode == PriorMode::Marginal) {
      dense_prior_ = std::move(next_dense_prior_);
      next_dense_prior_.reset();
      for (int i = 0; i < cfg_.stride; ++i) spline_.push_back(v_last, w_last);
      start_ = new_start;
      ++window_index_;
      return;
    }
    const bool capped = cfg_.cap_prior_by_information && last_marginal_info_.size() == static_cast<std::size_t>(6 * m);
    auto weight = [&](int local, bool angular) {
      Vec3 w = Vec3::Constant(cfg_.prior_weight);
      if (capped)
        for (int a = 0; a < 3; ++a)
          w(a) = std::min(w(a), last_marginal_info_[3 * ((angular ? m : 0) + local) + a]);
      return w;
    };
    for (int i = new_start; i <= last; ++i) {
      prior_.push_back({false, i, spline_.linear_control()[i], weight(i - start_, false)});
      prior_.push_back({true, i, spline_.angular_control()[i], weight(i - start_, true)});
    }
    for (int i = 0; i < cfg_.stride; ++i) spline_.push_back(v_last, w_last);
    start_ = new_start;
    ++window_index_;
  }

  BackendConfig cfg_;
  Extrinsics ext_;
  TwistSpline spline_;
  std::deque<VelocityMeasurement> radar_;
  std::deque<AngularVelocityMeasurement> angular_;
  std::vector<PriorEntry> prior_;
  std::optional<DensePrior> dense_prior_;
  std::optional<DensePrior> next_dense_prior_;
  std::vector<double> last_marginal_info_;  // 6m, diagonal of the inverse covariance of the last solve
  std::vector<SolverReport> reports_;
  std::vector<std::optional<SegmentCovariance>> segment_cov_;
  std::optional<std::int64_t> solved_end_ns_;
  std::int64_t watermark_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t last_stamp_ns_ = std::numeric_limits<std::int64_t>::min();
  bool initialized_ = false;
  bool seen_window_ = false;
  int start_ = 0;
  int window_index_ = 0;
  int dropped_ = 0;
  int skipped_ = 0;
};

}  // namespace revo
