#include "test_util.hpp"

using namespace revo;

namespace {

CameraIntrinsics intr() { return CameraIntrinsics{}; }

struct Scene {
  std::vector<PatchFlow> patches;
  std::vector<Vec3> x, xdot;
};

// Exact flows of static points at random pixels and depths for camera twist (v, w).
Scene make_scene(std::mt19937_64& rng, int n, const Vec3& v, const Vec3& w, double depth_scale = 1.0) {
  const auto in = intr();
  std::uniform_real_distribution<double> ux(0.0, in.width - 1.0), uy(0.0, in.height - 1.0), dd(3.0, 15.0);
  Scene s;
  for (int i = 0; i < n; ++i) {
    const Vec2 u(ux(rng), uy(rng));
    const Vec3 x = pixel_to_homogeneous(u, in);
    const Vec3 xd = image_flow(x, depth_scale * dd(rng), v, w);
    PatchFlow p;
    p.center = u;
    p.flow = Vec2(xd.x() * in.fx, xd.y() * in.fy);
    p.condition = 1.0;
    s.patches.push_back(p);
    s.x.push_back(x);
    s.xdot.push_back(xd);
  }
  return s;
}

// 6×6 adjoint of the radar-to-camera transform applied to the radar twist (ω, v).
Vec3 adjoint_camera_velocity(const Mat3& r, const Vec3& lever, const Vec3& v, const Vec3& w) {
  const Vec3 t = -r * lever;  // radar origin seen from the camera
  Eigen::Matrix<double, 6, 6> ad = Eigen::Matrix<double, 6, 6>::Zero();
  ad.block<3, 3>(0, 0) = r;
  ad.block<3, 3>(3, 3) = r;
  Mat3 tx;
  tx << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
  ad.block<3, 3>(3, 0) = tx * r;
  Eigen::Matrix<double, 6, 1> xi;
  xi << w, v;
  return (ad * xi).tail<3>();
}

}  // namespace

TEST(CameraVelocity, IdentityExtrinsicsNoLever) {
  const Extrinsics ext;
  EXPECT_EQ(camera_velocity_from_radar(Vec3(1, 2, 3), std::nullopt, ext), Vec3(1, 2, 3));
  EXPECT_EQ(camera_velocity_from_radar(Vec3(1, 2, 3), Vec3(0.5, 0, 0), ext), Vec3(1, 2, 3));
}

TEST(CameraVelocity, LeverArmExample) {
  Extrinsics ext;
  ext.lever_arm_radar_to_event = Vec3(0.1, 0, 0);
  const Vec3 v = camera_velocity_from_radar(Vec3::Zero(), Vec3(0, 0, 1), ext);
  EXPECT_NEAR((v - Vec3(0, 0.1, 0)).norm(), 0.0, 1e-15);
  // approximation branch drops the lever-arm term
  EXPECT_EQ(camera_velocity_from_radar(Vec3::Zero(), std::nullopt, ext), Vec3::Zero());
}

TEST(CameraVelocity, MatchesAdjointTransform) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) {
    Extrinsics ext;
    ext.rotation_radar_to_event = Rotation::exp(test::random_vec(rng, 3.0));
    ext.lever_arm_radar_to_event = test::random_vec(rng, 0.5);
    const Vec3 v = test::random_vec(rng, 3.0), w = test::random_vec(rng, 2.0);
    const Vec3 ours = camera_velocity_from_radar(v, w, ext);
    const Vec3 ref = adjoint_camera_velocity(ext.rotation_radar_to_event.matrix(), ext.lever_arm_radar_to_event, v, w);
    EXPECT_NEAR((ours - ref).norm(), 0.0, 1e-12);
  }
}

TEST(BuildRows, ZeroVelocityIsInsufficientExcitation) {
  std::mt19937_64 rng(32);
  const auto s = make_scene(rng, 10, Vec3(0, 0, 1), Vec3::Zero());
  test::expect_error(ErrorCode::InsufficientExcitation, [&] { build_rows(s.patches, Vec3::Zero(), intr()); });
  test::expect_error(ErrorCode::InsufficientExcitation, [&] { build_rows(s.patches, Vec3(0.05, 0, 0), intr()); });
}

TEST(BuildRows, FocusOfExpansionRowIsDropped) {
  const auto in = intr();
  PatchFlow at_foe;
  at_foe.center = Vec2(in.cx, in.cy);
  PatchFlow off;
  off.center = Vec2(10, 10);
  const std::vector<PatchFlow> p = {at_foe, off};
  EXPECT_EQ(build_rows(p, Vec3(0, 0, 1), in).size(), 1u);
}

TEST(BuildRows, ExactFlowsSatisfyTheConstraint) {
  std::mt19937_64 rng(33);
  const Vec3 v(0.4, -0.3, 1.5), w(0.3, -0.7, 0.2);
  const auto s = make_scene(rng, 60, v, w);
  const auto rows = build_rows(s.patches, v, intr());
  ASSERT_EQ(rows.size(), 60u);
  for (const auto& r : rows) EXPECT_NEAR(r.a.dot(w), r.eta, 1e-9);
  // the row matches the expanded constraint ([x]×v)ᵀ ẋ + ([x]×v)ᵀ [x]× ω = 0
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Vec3 c = s.x[i].cross(v);
    EXPECT_NEAR(c.dot(s.xdot[i]) + c.dot(s.x[i].cross(w)), 0.0, 1e-12);
  }
}

TEST(SolveOmega, PureTranslationGivesZero) {
  std::mt19937_64 rng(34);
  const Vec3 v(0.2, 0.1, 1.0);
  const auto s = make_scene(rng, 50, v, Vec3::Zero());
  const auto m = solve_omega(build_rows(s.patches, v, intr()));
  EXPECT_LE(m.omega.norm(), 1e-9);
  EXPECT_EQ(m.n_rows, 50);
}

TEST(SolveOmega, NoiselessRecovery) {
  std::mt19937_64 rng(35);
  const Vec3 v(0, 0, 1), w(0.1, -0.2, 0.5);
  const auto s = make_scene(rng, 50, v, w);
  const auto m = solve_omega(build_rows(s.patches, v, intr()), EpipolarConfig{}, Timestamp{42});
  EXPECT_LE((m.omega - w).norm(), 1e-8);
  EXPECT_EQ(m.stamp.ns, 42);
  EXPECT_TRUE(is_valid_covariance(m.covariance));
}

TEST(SolveOmega, OnePercentFlowNoise) {
  std::mt19937_64 rng(36);
  std::normal_distribution<double> n01(0.0, 1.0);
  const Vec3 v(0, 0, 1), w(0.1, -0.2, 0.5);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto s = make_scene(rng, 50, v, w);
    for (auto& p : s.patches) p.flow += 0.01 * p.flow.norm() * Vec2(n01(rng), n01(rng));
    const auto m = solve_omega(build_rows(s.patches, v, intr()));
    worst = std::max(worst, (m.omega - w).norm());
  }
  EXPECT_LT(worst, 0.05);
}

TEST(SolveOmega, DepthIndependence) {
  const Vec3 v(0.3, 0.0, 1.2), w(-0.4, 0.25, 0.1);
  std::mt19937_64 a(37), b(37);
  const auto near = make_scene(a, 40, v, w, 1.0);
  const auto far = make_scene(b, 40, v, w, 7.5);
  const Vec3 wn = solve_omega(build_rows(near.patches, v, intr())).omega;
  const Vec3 wf = solve_omega(build_rows(far.patches, v, intr())).omega;
  EXPECT_LE((wn - wf).norm(), 1e-9);
  EXPECT_LE((wn - w).norm(), 1e-9);
}

TEST(SolveOmega, VelocityScaleInvariance) {
  std::mt19937_64 rng(38);
  const Vec3 v(0.3, -0.2, 1.0), w(0.2, 0.1, -0.3);
  auto s = make_scene(rng, 40, v, w);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& p : s.patches) p.flow += Vec2(n01(rng), n01(rng));
  const auto r1 = build_rows(s.patches, v, intr());
  const auto r2 = build_rows(s.patches, 3.0 * v, intr());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_NEAR((r2[i].a - 3.0 * r1[i].a).norm(), 0.0, 1e-12);
    EXPECT_NEAR(r2[i].eta, 3.0 * r1[i].eta, 1e-12);
  }
  EXPECT_LE((solve_omega(r1).omega - solve_omega(r2).omega).norm(), 1e-9);
}

TEST(SolveOmega, ResidualOrthogonality) {
  std::mt19937_64 rng(39);
  const Vec3 v(0.1, 0.2, 1.0), w(0.5, 0.5, -0.5);
  auto s = make_scene(rng, 30, v, w);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& p : s.patches) p.flow += 5.0 * Vec2(n01(rng), n01(rng));
  const auto rows = build_rows(s.patches, v, intr());
  const Vec3 om = solve_omega(rows).omega;
  Vec3 g = Vec3::Zero();
  for (const auto& r : rows) g += r.a * (r.a.dot(om) - r.eta);
  EXPECT_LE(g.norm(), 1e-9);
}

TEST(SolveOmega, CovarianceIsResidualVarianceTimesInverseNormal) {
  std::mt19937_64 rng(40);
  const Vec3 v(0.1, 0.2, 1.0), w(0.5, 0.5, -0.5);
  auto s = make_scene(rng, 12, v, w);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& p : s.patches) p.flow += 3.0 * Vec2(n01(rng), n01(rng));
  const auto rows = build_rows(s.patches, v, intr());
  EpipolarConfig cfg;
  cfg.min_sigma = 0.0;
  const auto m = solve_omega(rows, cfg);
  Mat3 n = Mat3::Zero();
  double ss = 0.0;
  for (const auto& r : rows) {
    n += r.a * r.a.transpose();
    ss += std::pow(r.a.dot(m.omega) - r.eta, 2);
  }
  const Mat3 expected = ss / (12 - 3) * n.inverse();
  EXPECT_LE((m.covariance - expected).norm(), 1e-12 * expected.norm());
}

TEST(SolveOmega, PatchesCollinearWithFoeAreRankDeficient) {
  const auto in = intr();
  std::vector<PatchFlow> p;
  for (int i = 0; i < 10; ++i) {
    PatchFlow f;
    f.center = Vec2(10.0 + 30.0 * i, in.cy);
    f.flow = Vec2(5.0 * i, 0.0);
    p.push_back(f);
  }
  test::expect_error(ErrorCode::RankDeficient, [&] { solve_omega(build_rows(p, Vec3(0, 0, 1), in)); });
}

TEST(SolveOmega, FewerThanThreeRows) {
  std::mt19937_64 rng(41);
  const auto s = make_scene(rng, 2, Vec3(0, 0, 1), Vec3(0.1, 0, 0));
  test::expect_error(ErrorCode::FewerThanThreeRows, [&] { solve_omega(build_rows(s.patches, Vec3(0, 0, 1), intr())); });
}

TEST(SolveOmega, OutlierPassRemovesCorruptRow) {
  std::mt19937_64 rng(42);
  const Vec3 v(0, 0, 1), w(0.1, -0.2, 0.5);
  auto s = make_scene(rng, 40, v, w);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& p : s.patches) p.flow += 0.5 * Vec2(n01(rng), n01(rng));
  s.patches[5].flow += Vec2(400.0, -300.0);
  EpipolarConfig cfg;
  const double plain = (solve_omega(build_rows(s.patches, v, intr()), cfg).omega - w).norm();
  cfg.outlier_passes = 2;
  const auto m = solve_omega(build_rows(s.patches, v, intr()), cfg);
  EXPECT_LT((m.omega - w).norm(), 0.2 * plain);
  EXPECT_LT(m.n_rows, 40);
}

TEST(NearestRadarSeed, Examples) {
  std::vector<VelocityMeasurement> h(2);
  h[0].stamp = Timestamp{0};
  h[1].stamp = Timestamp{100 * kNsPerMs};
  EXPECT_EQ(nearest_radar_seed(h, Timestamp{40 * kNsPerMs}).stamp.ns, 0);
  EXPECT_EQ(nearest_radar_seed(h, Timestamp{51 * kNsPerMs}).stamp.ns, 100 * kNsPerMs);
  EXPECT_EQ(nearest_radar_seed(h, Timestamp{50 * kNsPerMs}).stamp.ns, 0);
  test::expect_error(ErrorCode::StaleSeed, [&] { nearest_radar_seed(h, Timestamp{300 * kNsPerMs}); });
  test::expect_error(ErrorCode::StaleSeed, [] { nearest_radar_seed({}, Timestamp{0}); });
}
