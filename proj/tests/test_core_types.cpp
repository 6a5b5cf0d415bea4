#include "test_util.hpp"

using namespace revo;

namespace {

CameraIntrinsics intr200() {
  CameraIntrinsics in;
  in.fx = in.fy = 200.0;
  in.cx = 173.0;
  in.cy = 130.0;
  in.width = 400;
  in.height = 300;
  return in;
}

}  // namespace

TEST(PixelToHomogeneous, PrincipalPointMapsToOpticalAxis) {
  const auto in = intr200();
  const Vec3 x = pixel_to_homogeneous(Vec2(in.cx, in.cy), in);
  EXPECT_EQ(x, Vec3(0, 0, 1));
}

TEST(PixelToHomogeneous, OneFocalLengthOffCentre) {
  const auto in = intr200();
  const Vec3 x = pixel_to_homogeneous(Vec2(in.cx + in.fx, in.cy), in);
  EXPECT_DOUBLE_EQ(x.x(), 1.0);
  EXPECT_DOUBLE_EQ(x.y(), 0.0);
  EXPECT_EQ(x.z(), 1.0);
}

TEST(PixelToHomogeneous, ArithmeticExample) {
  const Vec3 x = pixel_to_homogeneous(Vec2(100, 80), intr200());
  EXPECT_NEAR(x.x(), -0.365, 1e-15);
  EXPECT_NEAR(x.y(), -0.25, 1e-15);
  EXPECT_EQ(x.z(), 1.0);
}

TEST(PixelToHomogeneous, OutOfBoundsIsDomainError) {
  const auto in = intr200();
  test::expect_error(ErrorCode::Domain, [&] { pixel_to_homogeneous(Vec2(-1, 10), in); });
  test::expect_error(ErrorCode::Domain, [&] { pixel_to_homogeneous(Vec2(10, in.height), in); });
  test::expect_error(ErrorCode::Domain, [&] { pixel_to_homogeneous(Vec2(std::nan(""), 10), in); });
}

TEST(PixelToHomogeneous, InverseProjectionRoundTrip) {
  const auto in = intr200();
  for (int y = 0; y < in.height; y += 17)
    for (int x = 0; x < in.width; x += 13) {
      const Vec2 u(x + 0.25, y + 0.5);
      if (!in.contains(u)) continue;
      const Vec2 back = homogeneous_to_pixel(pixel_to_homogeneous(u, in), in);
      EXPECT_NEAR((back - u).norm(), 0.0, 1e-12);
    }
}

TEST(Intrinsics, ValidateRejectsBadValues) {
  auto in = intr200();
  in.fx = 0.0;
  test::expect_error(ErrorCode::Domain, [&] { in.validate(); });
  in = intr200();
  in.cx = in.width;
  test::expect_error(ErrorCode::Domain, [&] { in.validate(); });
}

TEST(Skew, ZeroVectorGivesZeroMatrix) { EXPECT_EQ(skew(Vec3::Zero()), Mat3::Zero()); }

TEST(Skew, UnitAxisCrossProduct) { EXPECT_EQ(skew(Vec3(0, 0, 1)) * Vec3(1, 0, 0), Vec3(0, 1, 0)); }

TEST(Skew, MatchesComponentCrossProduct) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = test::random_vec(rng, 5.0), b = test::random_vec(rng, 5.0);
    const Vec3 ref(a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(), a.x() * b.y() - a.y() * b.x());
    EXPECT_NEAR((skew(a) * b - ref).norm(), 0.0, 1e-13);
    EXPECT_EQ(skew(a).transpose(), -skew(a));
    EXPECT_NEAR((skew(a) * a).norm(), 0.0, 1e-13);
  }
}

TEST(Rotation, MatrixIsOrthonormal) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Rotation r = Rotation::exp(test::random_vec(rng, 3.0));
    const Mat3 m = r.matrix();
    EXPECT_NEAR((m.transpose() * m - Mat3::Identity()).norm(), 0.0, 1e-12);
    EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
    EXPECT_NEAR(r.quaternion().norm(), 1.0, 1e-12);
  }
}

TEST(Rotation, QuaternionMatrixRoundTrip) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Rotation r = Rotation::exp(test::random_vec(rng, 3.0));
    const Rotation back = Rotation::from_matrix(r.matrix());
    const Vec3 v = test::random_vec(rng, 2.0);
    EXPECT_NEAR((r * v - back * v).norm(), 0.0, 1e-12);
  }
}

TEST(Rotation, ConstructorNormalizesAndRejectsZero) {
  const Rotation r(2.0, 0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(r.w(), 1.0);
  test::expect_error(ErrorCode::Domain, [] { Rotation(0, 0, 0, 0); });
}

TEST(Rotation, ForwardCameraMapsRadarForwardToOpticalAxis) {
  const Rotation r = forward_looking_camera_rotation();
  EXPECT_NEAR((r * Vec3(1, 0, 0) - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((r * Vec3(0, 1, 0) - Vec3(-1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((r * Vec3(0, 0, 1) - Vec3(0, -1, 0)).norm(), 0.0, 1e-15);
}

TEST(Covariance, Validity) {
  EXPECT_TRUE(is_valid_covariance(Mat3::Identity()));
  EXPECT_TRUE(is_valid_covariance(Mat3::Zero()));
  Mat3 asym = Mat3::Identity();
  asym(0, 1) = 1e-6;
  EXPECT_FALSE(is_valid_covariance(asym));
  EXPECT_FALSE(is_valid_covariance(Vec3(1, -1, 1).asDiagonal()));
}

TEST(Timestamp, SecondsAndOrdering) {
  EXPECT_EQ(Timestamp::from_seconds(1.5).ns, 1'500'000'000);
  EXPECT_DOUBLE_EQ(Timestamp{1'000}.seconds(), 1e-6);
  EXPECT_LT(Timestamp{1}, Timestamp{2});
}

TEST(Error, CarriesCodeAndName) {
  const Error e(ErrorCode::StaleSeed, "x");
  EXPECT_EQ(e.code(), ErrorCode::StaleSeed);
  EXPECT_NE(std::string(e.what()).find("StaleSeed"), std::string::npos);
}
