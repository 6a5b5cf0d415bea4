#include "test_util.hpp"

using namespace revo;

namespace {

VelocityMeasurement radar_at(std::int64_t t, const Vec3& v, double var = 0.0025) {
  VelocityMeasurement m;
  m.stamp = Timestamp{t};
  m.velocity = v;
  m.covariance = var * Mat3::Identity();
  m.inlier_count = 10;
  return m;
}

AngularVelocityMeasurement angular_at(std::int64_t t, const Vec3& w, double var = 4e-4) {
  AngularVelocityMeasurement m;
  m.stamp = Timestamp{t};
  m.omega = w;
  m.covariance = var * Mat3::Identity();
  m.n_rows = 10;
  return m;
}

TwistSpline zero_spline(int m = 8, std::int64_t dt = 100 * kNsPerMs) {
  TwistSpline s(4, dt, 0);
  s.resize(m);
  return s;
}

SlidingWindowProblem base_problem(const TwistSpline& s) {
  SlidingWindowProblem p;
  p.spline = s;
  p.size = s.size();
  p.first_control = 0;
  return p;
}

Extrinsics yaw90() {
  Extrinsics e;
  e.rotation_radar_to_event = Rotation::from_axis_angle(Vec3(0, 0, 1), std::numbers::pi / 2);
  return e;
}

// Finite-difference check of every Jacobian block of `r` against `make(spline)`.
template <typename Make>
void check_jacobian(const Residual& r, const TwistSpline& s, Make make) {
  const double h = 1e-6;
  for (int i = 0; i < s.size(); ++i)
    for (int part = 0; part < 2; ++part)
      for (int a = 0; a < 3; ++a) {
        TwistSpline p = s, m = s;
        auto& cp = part ? p.angular_control() : p.linear_control();
        auto& cm = part ? m.angular_control() : m.linear_control();
        cp[i](a) += h;
        cm[i](a) -= h;
        const Vec3 fd = (make(p).value - make(m).value) / (2 * h);
        Vec3 an = Vec3::Zero();
        for (const auto& b : r.blocks)
          if (b.index == i && b.angular == static_cast<bool>(part)) an += b.d.col(a);
        EXPECT_LE((fd - an).norm(), 1e-6 * std::max(1.0, an.norm())) << "point " << i << " part " << part << " axis " << a;
      }
}

std::vector<SolverReport> run_stream(const BackendConfig& cfg, const std::vector<VelocityMeasurement>& radar,
                                     const std::vector<AngularVelocityMeasurement>& ang, SlidingWindowEstimator** out = nullptr) {
  static std::unique_ptr<SlidingWindowEstimator> keep;
  keep = std::make_unique<SlidingWindowEstimator>(cfg, Extrinsics{});
  std::size_t i = 0, j = 0;
  while (i < radar.size() || j < ang.size()) {
    if (j >= ang.size() || (i < radar.size() && radar[i].stamp <= ang[j].stamp))
      keep->add_radar(radar[i++]);
    else
      keep->add_angular(ang[j++]);
    keep->update();
  }
  keep->finish();
  if (out) *out = keep.get();
  return keep->reports();
}

}  // namespace

TEST(RadarResidual, MatchingConstantSplineIsZero) {
  TwistSpline s = zero_spline();
  s.resize(8);
  for (auto& c : s.linear_control()) c = Vec3(1, 2, 3);
  const auto r = radar_residual(radar_at(450 * kNsPerMs, Vec3(1, 2, 3)), s);
  EXPECT_NEAR(r.value.norm(), 0.0, 1e-15);
  EXPECT_FALSE(r.extrapolated);
}

TEST(RadarResidual, WeightedCostExample) {
  TwistSpline s = zero_spline();
  for (auto& c : s.linear_control()) c = Vec3(1, 0, 0);
  const auto r = radar_residual(radar_at(500 * kNsPerMs, Vec3(1.5, 0, 0), 0.25), s);
  EXPECT_NEAR((r.value - Vec3(0.5, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(r.cost(), 1.0, 1e-14);
  EXPECT_EQ(r.kind, ResidualKind::Radar);
}

TEST(RadarResidual, JacobianIsNegativeSplineWeights) {
  std::mt19937_64 rng(61);
  TwistSpline s = zero_spline(10);
  for (int i = 0; i < 10; ++i) {
    s.linear_control()[i] = test::random_vec(rng, 2.0);
    s.angular_control()[i] = test::random_vec(rng, 1.0);
  }
  const auto meas = radar_at(777 * kNsPerMs, Vec3(1, -1, 0.5));
  const auto r = radar_residual(meas, s);
  const auto jac = s.eval_jacobian(meas.stamp);
  ASSERT_EQ(r.blocks.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(r.blocks[j].index, jac.first_index + static_cast<int>(j));
    EXPECT_FALSE(r.blocks[j].angular);
    EXPECT_EQ(r.blocks[j].d, -jac.weights[j] * Mat3::Identity());
  }
  check_jacobian(r, s, [&](const TwistSpline& x) { return radar_residual(meas, x); });
}

TEST(RadarResidual, ExtrapolationGate) {
  const TwistSpline s = zero_spline();
  EXPECT_TRUE(radar_residual(radar_at(850 * kNsPerMs, Vec3::Zero()), s).extrapolated);
  test::expect_error(ErrorCode::OutOfDomain, [&] { radar_residual(radar_at(950 * kNsPerMs, Vec3::Zero()), s); });
}

TEST(EventResidual, IdentityExtrinsicsMatchingSplineIsZero) {
  TwistSpline s = zero_spline();
  for (auto& c : s.angular_control()) c = Vec3(0.1, 0.2, 0.3);
  const auto r = event_residual(angular_at(400 * kNsPerMs, Vec3(0.1, 0.2, 0.3)), s, Extrinsics{});
  EXPECT_NEAR(r.value.norm(), 0.0, 1e-15);
  EXPECT_EQ(r.kind, ResidualKind::Event);
}

TEST(EventResidual, YawedCameraSeesRotatedRate) {
  // 90° about z maps body x onto camera y
  TwistSpline s = zero_spline();
  for (auto& c : s.angular_control()) c = Vec3(1, 0, 0);
  const auto r = event_residual(angular_at(400 * kNsPerMs, Vec3(0, 1, 0)), s, yaw90());
  EXPECT_NEAR(r.value.norm(), 0.0, 1e-15);
  const auto wrong = event_residual(angular_at(400 * kNsPerMs, Vec3(0, -1, 0)), s, yaw90());
  EXPECT_NEAR((wrong.value - Vec3(0, -2, 0)).norm(), 0.0, 1e-15);
}

TEST(EventResidual, JacobianIsRotatedNegativeWeights) {
  std::mt19937_64 rng(62);
  TwistSpline s = zero_spline(10);
  for (int i = 0; i < 10; ++i) s.angular_control()[i] = test::random_vec(rng, 1.0);
  Extrinsics ext;
  ext.rotation_radar_to_event = Rotation::exp(Vec3(0.3, -0.2, 1.0));
  const auto meas = angular_at(612 * kNsPerMs, Vec3(0.2, 0.1, 0.0));
  const auto r = event_residual(meas, s, ext);
  const auto jac = s.eval_jacobian(meas.stamp);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_TRUE(r.blocks[j].angular);
    EXPECT_LE((r.blocks[j].d + jac.weights[j] * ext.rotation_radar_to_event.matrix()).norm(), 1e-15);
  }
  check_jacobian(r, s, [&](const TwistSpline& x) { return event_residual(meas, x, ext); });
}

TEST(PriorResidual, UnchangedAndMovedPoints) {
  TwistSpline s = zero_spline();
  const PriorEntry p{false, 3, Vec3::Zero(), Vec3::Constant(1e2)};
  EXPECT_EQ(prior_residual(p, s).value, Vec3::Zero());
  s.linear_control()[3] = Vec3(0.1, 0, 0);
  const auto r = prior_residual(p, s);
  EXPECT_NEAR(r.value.norm(), 0.1, 1e-15);
  EXPECT_NEAR(r.cost(), 1e2 * 0.01, 1e-12);
  check_jacobian(r, s, [&](const TwistSpline& x) { return prior_residual(p, x); });
}

TEST(InformationOf, RejectsIndefiniteCovariance) {
  EXPECT_NEAR((information_of(0.25 * Mat3::Identity()) - 4.0 * Mat3::Identity()).norm(), 0.0, 1e-14);
  test::expect_error(ErrorCode::Domain, [] { information_of(Mat3::Zero()); });
  test::expect_error(ErrorCode::Domain, [] { information_of(Vec3(1, -1, 1).asDiagonal()); });
}

TEST(SolveWindow, NoiselessConstantTwistFromZero) {
  const Vec3 v(1.2, -0.4, 0.3), w(0.05, 0.2, -0.1);
  SlidingWindowProblem p = base_problem(zero_spline());
  for (std::int64_t t = 300 * kNsPerMs; t < 800 * kNsPerMs; t += 20 * kNsPerMs) p.radar.push_back(radar_at(t, v));
  for (std::int64_t t = 300 * kNsPerMs; t < 800 * kNsPerMs; t += 10 * kNsPerMs) p.angular.push_back(angular_at(t, w));
  const auto sol = solve_window(p);
  for (std::int64_t t = 300 * kNsPerMs; t <= 800 * kNsPerMs; t += 5 * kNsPerMs) {
    EXPECT_LE((sol.spline.eval_linear(Timestamp{t}) - v).norm(), 1e-8);
    EXPECT_LE((sol.spline.eval_angular(Timestamp{t}) - w).norm(), 1e-8);
  }
  EXPECT_LT(sol.report.final_cost, 1e-12);
  EXPECT_LE(sol.report.final_cost, sol.report.initial_cost);
  EXPECT_EQ(sol.report.n_radar, 25);
  EXPECT_EQ(sol.report.n_event, 50);
}

TEST(SolveWindow, RadarOnlyLeavesAngularUntouched) {
  std::mt19937_64 rng(63);
  TwistSpline s = zero_spline();
  for (auto& c : s.angular_control()) c = test::random_vec(rng, 1.0);
  SlidingWindowProblem p = base_problem(s);
  for (std::int64_t t = 300 * kNsPerMs; t < 800 * kNsPerMs; t += 20 * kNsPerMs)
    p.radar.push_back(radar_at(t, Vec3(2.0 + 0.001 * static_cast<double>(t / kNsPerMs), 0, 0)));
  const auto sol = solve_window(p);
  EXPECT_EQ(sol.spline.angular_control(), s.angular_control());
  for (int i = 8; i < 16; ++i) EXPECT_TRUE(sol.fixed[i]);
  for (const auto& m : p.radar) EXPECT_LE((sol.spline.eval_linear(m.stamp) - m.velocity).norm(), 1e-6);
}

TEST(SolveWindow, LinearAndAngularBlocksAreSeparable) {
  TwistSpline s = zero_spline();
  SlidingWindowProblem p = base_problem(s);
  p.radar.push_back(radar_at(450 * kNsPerMs, Vec3(1, 0, 0)));
  p.angular.push_back(angular_at(460 * kNsPerMs, Vec3(0, 1, 0)));
  for (const auto& r : detail::evaluate_window(p, s).all)
    for (const auto& b : r.blocks) EXPECT_EQ(b.angular, r.kind == ResidualKind::Event);
}

TEST(SolveWindow, NoFactorsLeavesSplineAsIs) {
  const TwistSpline s = zero_spline();
  const auto sol = solve_window(base_problem(s));
  EXPECT_EQ(sol.report.termination, Termination::NoFactors);
  EXPECT_EQ(sol.spline.linear_control(), s.linear_control());
}

TEST(SolveWindow, HugeFixedPriorPinsSharedPoints) {
  BackendConfig cfg;
  cfg.prior_mode = PriorMode::Fixed;
  cfg.cap_prior_by_information = false;
  cfg.prior_weight = 1e9;
  SlidingWindowEstimator est(cfg, Extrinsics{});
  std::vector<TwistSpline> after;
  est.on_report = [&](const SolverReport&) { after.push_back(est.spline()); };
  // window 1 sees a velocity ramp that window 0 did not
  for (std::int64_t t = 0; t <= 1500 * kNsPerMs; t += 50 * kNsPerMs) {
    const double ts = static_cast<double>(t) * 1e-9;
    est.add_radar(radar_at(t, Vec3(1.0 + (ts > 0.9 ? 2.0 * (ts - 0.9) : 0.0), 0, 0), 0.25));
    est.update();
  }
  ASSERT_GE(after.size(), 2u);
  for (int i = 2; i < 8; ++i)
    EXPECT_LT((after[1].linear_control()[i] - after[0].linear_control()[i]).norm(), 1e-6) << i;
  EXPECT_GT((after[1].linear_control()[9] - after[0].linear_control()[7]).norm(), 1e-3);
}

TEST(Estimator, FixedModeCarriesSixSharedPointsPerComponent) {
  BackendConfig cfg;
  cfg.prior_mode = PriorMode::Fixed;
  SlidingWindowEstimator est(cfg, Extrinsics{});
  for (std::int64_t t = 0; t <= 1000 * kNsPerMs; t += 100 * kNsPerMs) est.add_radar(radar_at(t, Vec3(1, 0, 0)));
  est.update();
  ASSERT_EQ(est.reports().size(), 1u);
  const auto p = est.current_problem();
  ASSERT_EQ(p.prior.size(), 12u);
  int linear = 0;
  for (const auto& e : p.prior) {
    EXPECT_GE(e.index, 2);
    EXPECT_LE(e.index, 7);
    linear += e.angular ? 0 : 1;
  }
  EXPECT_EQ(linear, 6);
  EXPECT_EQ(p.first_control, 2);
  EXPECT_FALSE(p.dense_prior.has_value());
}

TEST(Estimator, MarginalModeCarriesDensePriorOnSharedPoints) {
  SlidingWindowEstimator est(BackendConfig{}, Extrinsics{});
  for (std::int64_t t = 0; t <= 1000 * kNsPerMs; t += 100 * kNsPerMs) est.add_radar(radar_at(t, Vec3(1, 0, 0)));
  est.update();
  const auto p = est.current_problem();
  ASSERT_TRUE(p.dense_prior.has_value());
  EXPECT_EQ(p.dense_prior->first_index, 2);
  EXPECT_EQ(p.dense_prior->count, 6);
  EXPECT_EQ(p.dense_prior->information.rows(), 36);
  EXPECT_TRUE(p.prior.empty());
}

TEST(Estimator, MarginalWindowsEqualBatchLeastSquares) {
  std::mt19937_64 rng(64);
  std::normal_distribution<double> n01(0.0, 1.0);
  BackendConfig cfg;
  Extrinsics ext;
  ext.rotation_radar_to_event = forward_looking_camera_rotation();
  const Mat3 rot = ext.rotation_radar_to_event.matrix();
  auto v_true = [](double t) { return Vec3(1.0 + std::sin(2 * t), 0.5 * std::cos(3 * t), 0.2 * t); };
  auto w_true = [](double t) { return Vec3(0.3 * std::sin(t), -0.2, 0.4 * std::cos(2 * t)); };
  std::vector<VelocityMeasurement> radar;
  std::vector<AngularVelocityMeasurement> ang;
  for (std::int64_t t = 0; t <= 1400 * kNsPerMs; t += 100 * kNsPerMs)
    radar.push_back(radar_at(t, v_true(t * 1e-9) + 0.05 * Vec3(n01(rng), n01(rng), n01(rng))));
  for (std::int64_t t = 5 * kNsPerMs; t < 1400 * kNsPerMs; t += 10 * kNsPerMs)
    ang.push_back(angular_at(t, rot * w_true(t * 1e-9) + 0.02 * Vec3(n01(rng), n01(rng), n01(rng))));

  SlidingWindowEstimator est(cfg, ext);
  for (const auto& m : radar) est.add_radar(m);
  for (const auto& m : ang) est.add_angular(m);
  est.update();
  ASSERT_EQ(est.reports().size(), 2u);

  // batch over points 0..9 with the window-0 seed prior and every measurement in [0, 1400) ms
  const int n = 10;
  const std::int64_t t0 = -3 * cfg.knot_dt_ns;
  TwistSpline layout(4, cfg.knot_dt_ns, t0);
  layout.resize(n);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(6 * n, 6 * n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(6 * n);
  auto lin = [](int i) { return 3 * i; };
  auto angi = [n](int i) { return 3 * (n + i); };
  const Vec3 v0 = radar.front().velocity, w0 = rot.transpose() * ang.front().omega;
  for (int i = 0; i < 8; ++i) {
    h.block<3, 3>(lin(i), lin(i)) += cfg.init_prior_weight * Mat3::Identity();
    b.segment<3>(lin(i)) += cfg.init_prior_weight * v0;
    h.block<3, 3>(angi(i), angi(i)) += cfg.init_prior_weight * Mat3::Identity();
    b.segment<3>(angi(i)) += cfg.init_prior_weight * w0;
  }
  for (const auto& m : radar) {
    if (m.stamp.ns >= 1400 * kNsPerMs) continue;
    const auto jac = layout.eval_jacobian(m.stamp);
    const Mat3 info = m.covariance.inverse();
    for (int a = 0; a < 4; ++a) {
      b.segment<3>(lin(jac.first_index + a)) += jac.weights[a] * info * m.velocity;
      for (int c = 0; c < 4; ++c)
        h.block<3, 3>(lin(jac.first_index + a), lin(jac.first_index + c)) += jac.weights[a] * jac.weights[c] * info;
    }
  }
  for (const auto& m : ang) {
    const auto jac = layout.eval_jacobian(m.stamp);
    const Mat3 info = rot.transpose() * m.covariance.inverse() * rot;
    for (int a = 0; a < 4; ++a) {
      b.segment<3>(angi(jac.first_index + a)) += jac.weights[a] * rot.transpose() * m.covariance.inverse() * m.omega;
      for (int c = 0; c < 4; ++c)
        h.block<3, 3>(angi(jac.first_index + a), angi(jac.first_index + c)) += jac.weights[a] * jac.weights[c] * info;
    }
  }
  const Eigen::VectorXd x = h.ldlt().solve(b);
  const auto& s = est.spline();
  for (int i = 2; i < 10; ++i) {
    EXPECT_LE((s.linear_control()[i] - x.segment<3>(lin(i))).norm(), 1e-6) << i;
    EXPECT_LE((s.angular_control()[i] - x.segment<3>(angi(i))).norm(), 1e-6) << i;
  }
}

TEST(Estimator, ConstantStreamReproducesTheConstant) {
  const Vec3 v(2.0, -1.0, 0.5), w(0.1, 0.0, -0.3);
  std::vector<VelocityMeasurement> radar;
  std::vector<AngularVelocityMeasurement> ang;
  for (std::int64_t t = 0; t <= 5 * kNsPerSec; t += 100 * kNsPerMs) radar.push_back(radar_at(t, v));
  for (std::int64_t t = 0; t <= 5 * kNsPerSec; t += 10 * kNsPerMs) ang.push_back(angular_at(t, w));
  for (auto mode : {PriorMode::Marginal, PriorMode::Fixed}) {
    BackendConfig cfg;
    cfg.prior_mode = mode;
    SlidingWindowEstimator* est = nullptr;
    const auto reports = run_stream(cfg, radar, ang, &est);
    EXPECT_GT(reports.size(), 5u);
    const auto samples = est->estimates(10 * kNsPerMs);
    ASSERT_FALSE(samples.empty());
    for (const auto& s : samples) {
      EXPECT_LE((s.linear - v).norm(), 1e-6);
      EXPECT_LE((s.angular - w).norm(), 1e-6);
    }
    for (const auto& r : reports) EXPECT_LE(r.final_cost, r.initial_cost);
  }
}

TEST(Estimator, StepChangeSettlesWithinAFewKnots) {
  std::vector<VelocityMeasurement> radar;
  for (std::int64_t t = 0; t <= 10 * kNsPerSec; t += 100 * kNsPerMs)
    radar.push_back(radar_at(t, Vec3(t >= 5 * kNsPerSec ? 2.0 : 1.0, 0, 0)));
  BackendConfig cfg;
  SlidingWindowEstimator* est = nullptr;
  run_stream(cfg, radar, {}, &est);
  const std::int64_t settle = 4 * cfg.knot_dt_ns;
  for (const auto& s : est->estimates(10 * kNsPerMs)) {
    if (s.stamp.ns <= 5 * kNsPerSec - settle) {
      EXPECT_NEAR(s.linear.x(), 1.0, 0.05) << s.stamp.ns;
    }
    if (s.stamp.ns >= 5 * kNsPerSec + settle) {
      EXPECT_NEAR(s.linear.x(), 2.0, 0.05) << s.stamp.ns;
    }
  }
}

TEST(Estimator, GapLongerThanWindowIsSkippedWithWarning) {
  std::vector<VelocityMeasurement> radar;
  for (std::int64_t t = 0; t <= 2 * kNsPerSec; t += 100 * kNsPerMs) radar.push_back(radar_at(t, Vec3(1, 0, 0)));
  for (std::int64_t t = 6 * kNsPerSec; t <= 8 * kNsPerSec; t += 100 * kNsPerMs) radar.push_back(radar_at(t, Vec3(1, 0, 0)));
  SlidingWindowEstimator est(BackendConfig{}, Extrinsics{});
  int warnings = 0;
  est.on_warning = [&](const std::string&) { ++warnings; };
  for (const auto& m : radar) {
    est.add_radar(m);
    est.update();
  }
  est.finish();
  EXPECT_GT(est.skipped_windows(), 0);
  EXPECT_EQ(warnings, est.skipped_windows());
  const auto samples = est.estimates(10 * kNsPerMs);
  bool in_gap = false;
  for (const auto& s : samples) in_gap |= s.stamp.ns > 3 * kNsPerSec && s.stamp.ns < 5 * kNsPerSec;
  EXPECT_FALSE(in_gap);
  EXPECT_GE(samples.back().stamp.ns, 7 * kNsPerSec);
}

TEST(Estimator, DeterministicAcrossRuns) {
  std::mt19937_64 rng(65);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<VelocityMeasurement> radar;
  std::vector<AngularVelocityMeasurement> ang;
  for (std::int64_t t = 0; t <= 4 * kNsPerSec; t += 100 * kNsPerMs)
    radar.push_back(radar_at(t, Vec3(1 + n01(rng), n01(rng), n01(rng))));
  for (std::int64_t t = 0; t <= 4 * kNsPerSec; t += 10 * kNsPerMs) ang.push_back(angular_at(t, 0.1 * Vec3(n01(rng), n01(rng), n01(rng))));
  SlidingWindowEstimator* e = nullptr;
  const auto a = run_stream(BackendConfig{}, radar, ang, &e);
  const auto sa = e->estimates(10 * kNsPerMs);
  const auto b = run_stream(BackendConfig{}, radar, ang, &e);
  const auto sb = e->estimates(10 * kNsPerMs);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].final_cost, b[i].final_cost);
    EXPECT_EQ(a[i].iterations, b[i].iterations);
  }
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].linear, sb[i].linear);
    EXPECT_EQ(sa[i].angular_var, sb[i].angular_var);
  }
}

TEST(Estimator, OutOfOrderInputIsContractViolation) {
  SlidingWindowEstimator est(BackendConfig{}, Extrinsics{});
  est.add_radar(radar_at(100, Vec3::Zero()));
  test::expect_error(ErrorCode::ContractViolation, [&] { est.add_radar(radar_at(50, Vec3::Zero())); });
  est.add_angular(angular_at(100, Vec3::Zero()));
  test::expect_error(ErrorCode::ContractViolation, [&] { est.add_angular(angular_at(50, Vec3::Zero())); });
}

TEST(Estimator, ConfigValidation) {
  BackendConfig cfg;
  cfg.window_size = 3;
  test::expect_error(ErrorCode::ConfigError, [&] { cfg.validate(); });
  cfg = BackendConfig{};
  cfg.stride = 8;
  test::expect_error(ErrorCode::ConfigError, [&] { cfg.validate(); });
}

TEST(Marginalize, RejectsBadDropCount) {
  const SlidingWindowProblem p = base_problem(zero_spline());
  test::expect_error(ErrorCode::Domain, [&] { marginalize_window(p, p.spline, 0, 0); });
  test::expect_error(ErrorCode::Domain, [&] { marginalize_window(p, p.spline, 8, 0); });
}

TEST(Report, FormatsPerFactorCosts) {
  SolverReport r;
  r.window_index = 3;
  r.radar_cost = 1.5;
  const std::string s = format_report(r);
  EXPECT_NE(s.find("window=3"), std::string::npos);
  EXPECT_NE(s.find("alpha_r=1.5"), std::string::npos);
  EXPECT_NE(s.find("term=no_factors"), std::string::npos);
}
