#pragma once

// Uniform cumulative B-splines for body-frame linear and angular velocity.

#include "revo/core_types.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace revo {

/// Cumulative blending matrix of a uniform B-spline of order k (degree k-1).
/// Row j holds the polynomial coefficients (in u) of λ_j(u); λ_0 ≡ 1.
inline Eigen::MatrixXd cumulative_blending_matrix(int order) {
  if (order < 2) throw Error(ErrorCode::Domain, "spline order must be at least 2");
  const int k = order;
  auto binom = [](int n, int r) {
    double c = 1.0;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
  };
  double fact = 1.0;
  for (int i = 2; i < k; ++i) fact *= i;

  Eigen::MatrixXd basis(k, k);
  for (int s = 0; s < k; ++s) {
    for (int n = 0; n < k; ++n) {
      double sum = 0.0;
      for (int l = s; l < k; ++l) {
        const double sign = ((l - s) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * binom(k, l - s) * std::pow(static_cast<double>(k - 1 - l), k - 1 - n);
      }
      basis(s, n) = binom(k - 1, n) * sum / fact;
    }
  }
  Eigen::MatrixXd cumulative = Eigen::MatrixXd::Zero(k, k);
  for (int j = 0; j < k; ++j)
    for (int s = j; s < k; ++s) cumulative.row(j) += basis.row(s);
  return cumulative;
}

/// Active control points of one evaluation and their per-axis weights.
struct SplineJacobian {
  int first_index = 0;
  std::vector<double> weights;  // k entries, control points first_index .. first_index+k-1
};

class TwistSpline {
 public:
  TwistSpline() : TwistSpline(4, 100 * kNsPerMs, 0) {}

  TwistSpline(int order, std::int64_t knot_dt_ns, std::int64_t t0_ns)
      : order_(order), knot_dt_ns_(knot_dt_ns), t0_ns_(t0_ns), blend_(cumulative_blending_matrix(order)) {
    if (knot_dt_ns <= 0) throw Error(ErrorCode::Domain, "knot spacing must be positive");
  }

  int order() const { return order_; }
  std::int64_t knot_dt_ns() const { return knot_dt_ns_; }
  std::int64_t t0_ns() const { return t0_ns_; }
  int size() const { return static_cast<int>(v_ctrl_.size()); }

  std::vector<Vec3>& linear_control() { return v_ctrl_; }
  std::vector<Vec3>& angular_control() { return w_ctrl_; }
  const std::vector<Vec3>& linear_control() const { return v_ctrl_; }
  const std::vector<Vec3>& angular_control() const { return w_ctrl_; }

  void push_back(const Vec3& v, const Vec3& w) {
    v_ctrl_.push_back(v);
    w_ctrl_.push_back(w);
  }
  void resize(int m, const Vec3& v = Vec3::Zero(), const Vec3& w = Vec3::Zero()) {
    v_ctrl_.resize(static_cast<std::size_t>(m), v);
    w_ctrl_.resize(static_cast<std::size_t>(m), w);
  }

  /// Valid evaluation domain [begin, end]; empty unless size() >= order().
  std::int64_t domain_begin_ns() const { return t0_ns_ + (order_ - 1) * knot_dt_ns_; }
  std::int64_t domain_end_ns() const { return t0_ns_ + static_cast<std::int64_t>(size()) * knot_dt_ns_; }
  std::int64_t segment_begin_ns(int segment) const { return t0_ns_ + segment * knot_dt_ns_; }

  bool in_domain(std::int64_t t_ns) const {
    return size() >= order_ && t_ns >= domain_begin_ns() && t_ns <= domain_end_ns();
  }

  /// Cumulative coefficients (λ_0..λ_{k-1}) at normalized segment time u.
  Eigen::VectorXd cumulative_coefficients(double u) const {
    Eigen::VectorXd powers(order_);
    double p = 1.0;
    for (int n = 0; n < order_; ++n) {
      powers(n) = p;
      p *= u;
    }
    return blend_ * powers;
  }

  /// `extrapolate` allows up to one knot past the domain end using the last segment polynomial.
  SplineJacobian eval_jacobian(std::int64_t t_ns, bool extrapolate = false) const {
    const auto [segment, u] = locate(static_cast<double>(t_ns - t0_ns_) / static_cast<double>(knot_dt_ns_),
                                     t_ns >= domain_begin_ns() && t_ns <= domain_end_ns(),
                                     extrapolate && t_ns > domain_end_ns() && t_ns <= domain_end_ns() + knot_dt_ns_);
    return weights_at(segment, u);
  }

  SplineJacobian eval_jacobian(Timestamp t, bool extrapolate = false) const { return eval_jacobian(t.ns, extrapolate); }

  /// Evaluation at fractional nanoseconds, used by the integrators.
  SplineJacobian eval_jacobian_seconds(double t_s) const {
    const double tau = (t_s - static_cast<double>(t0_ns_) * 1e-9) / (static_cast<double>(knot_dt_ns_) * 1e-9);
    const double lo = order_ - 1, hi = size();
    const double slack = 1e-9;
    return weights_at_tau(tau, size() >= order_ && tau >= lo - slack && tau <= hi + slack);
  }

  Vec3 eval_linear(Timestamp t, bool extrapolate = false) const { return apply(eval_jacobian(t, extrapolate), v_ctrl_); }
  Vec3 eval_angular(Timestamp t, bool extrapolate = false) const { return apply(eval_jacobian(t, extrapolate), w_ctrl_); }
  Vec3 eval_linear_seconds(double t_s) const { return apply(eval_jacobian_seconds(t_s), v_ctrl_); }
  Vec3 eval_angular_seconds(double t_s) const { return apply(eval_jacobian_seconds(t_s), w_ctrl_); }

  static Vec3 apply(const SplineJacobian& jac, const std::vector<Vec3>& ctrl) {
    Vec3 out = Vec3::Zero();
    for (std::size_t j = 0; j < jac.weights.size(); ++j) out += jac.weights[j] * ctrl[jac.first_index + j];
    return out;
  }

  /// Cumulative-form evaluation, v_i + Σ λ_j (v_{i+j} - v_{i+j-1}); equal to `apply` up to rounding.
  Vec3 eval_cumulative(std::int64_t t_ns, const std::vector<Vec3>& ctrl) const {
    const auto [segment, u] = locate(static_cast<double>(t_ns - t0_ns_) / static_cast<double>(knot_dt_ns_),
                                     in_domain(t_ns), false);
    const int i = segment - order_ + 1;
    const Eigen::VectorXd lambda = cumulative_coefficients(u);
    Vec3 out = ctrl[i];
    for (int j = 1; j < order_; ++j) out += lambda(j) * (ctrl[i + j] - ctrl[i + j - 1]);
    return out;
  }

 private:
  struct Location {
    int segment;
    double u;
  };

  Location locate(double tau, bool inside, bool extrapolating) const {
    if (size() < order_ || !(inside || extrapolating)) throw Error(ErrorCode::OutOfDomain, "time outside spline domain");
    int segment = static_cast<int>(std::floor(tau));
    segment = std::clamp(segment, order_ - 1, size() - 1);
    return {segment, tau - segment};
  }

  SplineJacobian weights_at_tau(double tau, bool inside) const {
    const auto [segment, u] = locate(tau, inside, false);
    return weights_at(segment, u);
  }

  SplineJacobian weights_at(int segment, double u) const {
    const Eigen::VectorXd lambda = cumulative_coefficients(u);
    SplineJacobian jac;
    jac.first_index = segment - order_ + 1;
    jac.weights.resize(static_cast<std::size_t>(order_));
    for (int j = 0; j < order_; ++j) jac.weights[j] = lambda(j) - (j + 1 < order_ ? lambda(j + 1) : 0.0);
    return jac;
  }

  int order_;
  std::int64_t knot_dt_ns_;
  std::int64_t t0_ns_;
  Eigen::MatrixXd blend_;
  std::vector<Vec3> v_ctrl_;
  std::vector<Vec3> w_ctrl_;
};

struct PoseSample {
  Timestamp stamp;
  Vec3 position = Vec3::Zero();
  Rotation orientation;
};

/// Body twist (linear, angular) as a function of absolute time in seconds.
using TwistFunction = std::function<std::pair<Vec3, Vec3>(double)>;

namespace detail {

using PoseState = Eigen::Matrix<double, 7, 1>;  // p (3), q (w, x, y, z)

inline PoseState pose_derivative(const PoseState& s, const Vec3& v, const Vec3& w) {
  const Eigen::Quaterniond q(s(3), s(4), s(5), s(6));
  PoseState d;
  d.head<3>() = q.normalized() * v;
  const Eigen::Quaterniond qd = q * Eigen::Quaterniond(0.0, w.x(), w.y(), w.z());
  d(3) = 0.5 * qd.w();
  d(4) = 0.5 * qd.x();
  d(5) = 0.5 * qd.y();
  d(6) = 0.5 * qd.z();
  return d;
}

inline PoseState rk4_step(const PoseState& s, double t, double h, const TwistFunction& twist) {
  const auto [v1, w1] = twist(t);
  const auto [v2, w2] = twist(t + 0.5 * h);
  const auto [v4, w4] = twist(t + h);
  const PoseState k1 = pose_derivative(s, v1, w1);
  const PoseState k2 = pose_derivative(s + 0.5 * h * k1, v2, w2);
  const PoseState k3 = pose_derivative(s + 0.5 * h * k2, v2, w2);
  const PoseState k4 = pose_derivative(s + h * k3, v4, w4);
  PoseState out = s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.tail<4>().normalize();
  return out;
}

inline PoseSample to_sample(std::int64_t t_ns, const PoseState& s) {
  return {Timestamp{t_ns}, s.head<3>(), Rotation(s(3), s(4), s(5), s(6))};
}

}  // namespace detail

/// RK4 integration of ṗ = R v(t), Ṙ = R [ω(t)]× from the identity pose, reporting the pose at
/// every requested stamp (ascending, first stamp is the start). Substeps never exceed `max_step_ns`.
inline std::vector<PoseSample> integrate_twist_at(const TwistFunction& twist, const std::vector<std::int64_t>& stamps_ns,
                                                  std::int64_t max_step_ns) {
  if (max_step_ns <= 0) throw Error(ErrorCode::Domain, "integration step must be positive");
  std::vector<PoseSample> out;
  if (stamps_ns.empty()) return out;
  detail::PoseState s;
  s << 0, 0, 0, 1, 0, 0, 0;
  out.push_back(detail::to_sample(stamps_ns.front(), s));
  for (std::size_t i = 1; i < stamps_ns.size(); ++i) {
    const std::int64_t a = stamps_ns[i - 1], b = stamps_ns[i];
    if (b < a) throw Error(ErrorCode::ContractViolation, "integration stamps must be ascending");
    const std::int64_t n = std::max<std::int64_t>(1, (b - a + max_step_ns - 1) / max_step_ns);
    for (std::int64_t j = 0; j < n && b > a; ++j) {
      const double ta = static_cast<double>(a + (b - a) * j / n) * 1e-9;
      const double tb = static_cast<double>(a + (b - a) * (j + 1) / n) * 1e-9;
      s = detail::rk4_step(s, ta, tb - ta, twist);
    }
    out.push_back(detail::to_sample(b, s));
  }
  return out;
}

/// Pose track at a fixed step from t_start to t_end (the last step may be shorter).
inline std::vector<PoseSample> integrate_twist(const TwistFunction& twist, Timestamp t_start, Timestamp t_end,
                                               std::int64_t step_ns = kNsPerMs) {
  if (step_ns <= 0) throw Error(ErrorCode::Domain, "integration step must be positive");
  if (t_end < t_start) throw Error(ErrorCode::Domain, "t_end before t_start");
  std::vector<std::int64_t> stamps;
  for (std::int64_t t = t_start.ns; t < t_end.ns; t += step_ns) stamps.push_back(t);
  stamps.push_back(t_end.ns);
  return integrate_twist_at(twist, stamps, step_ns);
}

inline std::vector<PoseSample> integrate_pose(const TwistSpline& spline, Timestamp t_start, Timestamp t_end,
                                              std::int64_t step_ns = kNsPerMs) {
  if (!spline.in_domain(t_start.ns) || !spline.in_domain(t_end.ns))
    throw Error(ErrorCode::OutOfDomain, "integration interval outside spline domain");
  return integrate_twist(
      [&spline](double t) { return std::make_pair(spline.eval_linear_seconds(t), spline.eval_angular_seconds(t)); },
      t_start, t_end, step_ns);
}

}  // namespace revo
