#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "evflow/geometry.hpp"
#include "expect_error.hpp"
#include "oracles/camera_oracle.hpp"
#include "oracles/rotation_oracle.hpp"

using namespace evflow;

namespace {

constexpr double kPi = 3.141592653589793;

CameraModel camera(double f, double cx, double cy, Distortion d = {}, SensorGeometry g = kEvk4Geometry) {
  return CameraModel{Intrinsics{f, f, cx, cy}, d, g};
}

CameraPair identity_pair() {
  CameraPair p;
  p.rgb = camera(1000, 640, 360);
  p.dvs = p.rgb;
  return p;
}

Eigen::Matrix3d to_eigen(const oracle::Mat3& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = m[i][j];
  }
  return r;
}

oracle::Camera to_oracle(const CameraModel& c) {
  return {c.intrinsics.fx, c.intrinsics.fy, c.intrinsics.cx, c.intrinsics.cy,
          c.distortion.k1, c.distortion.k2, c.distortion.p1, c.distortion.p2};
}

oracle::Mat3 from_eigen(const Eigen::Matrix3d& r) {
  oracle::Mat3 m{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = r(i, j);
  }
  return m;
}

// Random pair with a rotation of at most max_deg and coefficients bounded by
// max_k (radial) and max_p (tangential).
CameraPair random_pair(std::mt19937_64& rng, double max_deg, double max_k, double max_p) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> focal(600.0, 1400.0);
  const auto dist = [&] {
    return Distortion{max_k * unit(rng), max_k * unit(rng), max_p * unit(rng), max_p * unit(rng)};
  };
  CameraPair p;
  p.rgb = camera(focal(rng), 640 + 20 * unit(rng), 360 + 20 * unit(rng), dist());
  p.rgb.intrinsics.fy = p.rgb.intrinsics.fx * (1.0 + 0.01 * unit(rng));
  p.dvs = camera(focal(rng), 640 + 20 * unit(rng), 360 + 20 * unit(rng), dist());
  const double angle = max_deg * kPi / 180.0 * std::abs(unit(rng));
  p.extrinsics.rotation = to_eigen(oracle::axis_angle(unit(rng), unit(rng), unit(rng) + 1e-3, angle));
  return p;
}

}  // namespace

TEST(Distort, Cases) {
  const Eigen::Vector2d p(0.3, -0.2);
  EXPECT_EQ(distort(p, {}), p);
  EXPECT_EQ(distort({0, 0}, {0.1, -0.2, 0.01, 0.01}), Eigen::Vector2d(0, 0));
  const auto q = distort({0.5, 0.0}, {0.1, 0, 0, 0});
  EXPECT_DOUBLE_EQ(q.x(), 0.5125);
  EXPECT_DOUBLE_EQ(q.y(), 0.0);
}

TEST(Distort, JacobianMatchesFiniteDifference) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  const double h = 1e-6;
  for (int i = 0; i < 200; ++i) {
    const Distortion d{0.3 * u(rng), 0.3 * u(rng), 0.02 * u(rng), 0.02 * u(rng)};
    const Eigen::Vector2d p(u(rng), u(rng));
    const auto jac = distort_jacobian(p, d);
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[k] = h;
      const Eigen::Vector2d col = (distort(p + e, d) - distort(p - e, d)) / (2 * h);
      EXPECT_NEAR((jac.col(k) - col).norm(), 0.0, 1e-8);
    }
  }
}

TEST(Undistort, ZeroIsIdentity) {
  const Eigen::Vector2d p(0.7, 0.1);
  EXPECT_EQ(undistort(p, {}), p);
}

TEST(Undistort, RoundTripOverCentredUnitBox) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5), k(-0.3, 0.3), t(-0.01, 0.01);
  for (int i = 0; i < 10'000; ++i) {
    const Distortion d{k(rng), k(rng), t(rng), t(rng)};
    const Eigen::Vector2d p(u(rng), u(rng));
    const Eigen::Vector2d q = distort(p, d);
    const Eigen::Vector2d back = undistort(q, d);
    EXPECT_LE((back - p).norm(), 1e-6);
    EXPECT_LE((distort(back, d) - q).norm(), 1e-6);
  }
}

TEST(Undistort, PastTheFoldIsReported) {
  const Distortion d{-5.0, 0, 0, 0};
  EXPECT_ERRC(undistort({1.5, 0.0}, d), Errc::NoConvergence);
  EXPECT_ERRC(undistort({1.5 / std::sqrt(2.0), 1.5 / std::sqrt(2.0)}, d), Errc::NoConvergence);
}

TEST(Transfer, IdentityCalibration) {
  const auto pair = identity_pair();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(0, 1280), y(0, 720);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector2d p(x(rng), y(rng));
    EXPECT_LE((transfer_point(p, pair) - p).norm(), 1e-9);
  }
}

TEST(Transfer, PrincipalPointToPrincipalPoint) {
  CameraPair pair;
  pair.rgb = camera(900, 630.5, 350.25);
  pair.dvs = camera(1100, 645.0, 371.0);
  const auto q = transfer_point({630.5, 350.25}, pair);
  EXPECT_NEAR(q.x(), 645.0, 1e-12);
  EXPECT_NEAR(q.y(), 371.0, 1e-12);
}

TEST(Transfer, MatchesIndependentOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> x(0, 1280), y(0, 720);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pair = random_pair(rng, 5.0, 0.2, 0.01);
    for (int i = 0; i < 20;) {
      const Eigen::Vector2d p(x(rng), y(rng));
      // Stay inside the region where |k| <= 0.2 is invertible.
      if (pair.rgb.intrinsics.to_normalized(p).norm() > 0.6) continue;
      ++i;
      const auto want = oracle::transfer(to_oracle(pair.rgb), to_oracle(pair.dvs),
                                         from_eigen(pair.extrinsics.rotation), p.x(), p.y());
      ASSERT_TRUE(want.has_value());
      const auto got = transfer_point(p, pair);
      EXPECT_NEAR(got.x(), (*want)[0], 1e-3);
      EXPECT_NEAR(got.y(), (*want)[1], 1e-3);
    }
  }
}

TEST(Transfer, RotationThenInverseReturnsHome) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> x(100, 1180), y(100, 620);
  for (int trial = 0; trial < 100; ++trial) {
    auto there = random_pair(rng, 10.0, 0.0, 0.0);
    there.rgb.distortion = there.dvs.distortion = {};
    CameraPair back;
    back.rgb = there.dvs;
    back.dvs = there.rgb;
    back.extrinsics.rotation = there.extrinsics.rotation.transpose();
    const Eigen::Vector2d p(x(rng), y(rng));
    EXPECT_LE((transfer_point(transfer_point(p, there), back) - p).norm(), 1e-6);
  }
}

TEST(Transfer, BehindCamera) {
  auto pair = identity_pair();
  pair.extrinsics.rotation = to_eigen(oracle::axis_angle(0, 1, 0, kPi));
  EXPECT_ERRC(transfer_point({640, 360}, pair), Errc::BehindCamera);
}

TEST(TransferBox, IdentityKeepsBox) {
  const BBox b{100.25, 50.5, 40, 30};
  const auto t = transfer_bbox(b, identity_pair());
  EXPECT_NEAR(t.box.x, b.x, 1e-9);
  EXPECT_NEAR(t.box.y, b.y, 1e-9);
  EXPECT_NEAR(t.box.w, b.w, 1e-9);
  EXPECT_NEAR(t.box.h, b.h, 1e-9);
  EXPECT_FALSE(t.partial);
  EXPECT_FALSE(t.degenerate);
}

TEST(TransferBox, InPlaneHalfTurnReflectsThroughPrincipalPoint) {
  auto pair = identity_pair();
  pair.extrinsics.rotation = to_eigen(oracle::axis_angle(0, 0, 1, kPi));
  const BBox b{600, 300, 50, 20};
  const auto t = transfer_bbox(b, pair).box;
  EXPECT_NEAR(t.x, 2 * 640 - b.right(), 1e-9);
  EXPECT_NEAR(t.y, 2 * 360 - b.bottom(), 1e-9);
  EXPECT_NEAR(t.w, b.w, 1e-9);
  EXPECT_NEAR(t.h, b.h, 1e-9);
}

TEST(TransferBox, YawPushesBoxOffTheRightEdge) {
  auto pair = identity_pair();
  pair.extrinsics.rotation = to_eigen(oracle::axis_angle(0, 1, 0, 3.0 * kPi / 180.0));
  const BBox b{1200, 300, 60, 40};
  const auto t = transfer_bbox(b, pair);
  EXPECT_TRUE(t.partial);
  EXPECT_DOUBLE_EQ(t.box.right(), 1279.0);

  double min_x = 1e9, min_y = 1e9, max_y = -1e9;
  const auto cam = to_oracle(pair.rgb);
  for (auto [u, v] : {std::pair{b.x, b.y}, {b.right(), b.y}, {b.x, b.bottom()}, {b.right(), b.bottom()}}) {
    const auto q = *oracle::transfer(cam, cam, from_eigen(pair.extrinsics.rotation), u, v);
    min_x = std::min(min_x, q[0]);
    min_y = std::min(min_y, q[1]);
    max_y = std::max(max_y, q[1]);
  }
  EXPECT_NEAR(t.box.x, std::min(min_x, 1279.0), 1e-6);
  EXPECT_NEAR(t.box.y, min_y, 1e-6);
  EXPECT_NEAR(t.box.bottom(), max_y, 1e-6);
}

TEST(TransferBox, OffSensor) {
  auto pair = identity_pair();
  pair.extrinsics.rotation = to_eigen(oracle::axis_angle(0, 1, 0, 30.0 * kPi / 180.0));
  EXPECT_ERRC(transfer_bbox({1200, 300, 60, 40}, pair), Errc::OffSensor);
}

TEST(TransferBox, OutputAlwaysInsideSensor) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> x(-100, 1300), y(-100, 800), s(1, 300);
  for (int trial = 0; trial < 500; ++trial) {
    const auto pair = random_pair(rng, 5.0, 0.1, 0.005);
    const BBox b{x(rng), y(rng), s(rng), s(rng)};
    try {
      const auto t = transfer_bbox(b, pair);
      EXPECT_TRUE(t.box.valid());
      EXPECT_GE(t.box.x, 0.0);
      EXPECT_GE(t.box.y, 0.0);
      EXPECT_LE(t.box.right(), 1279.0);
      EXPECT_LE(t.box.bottom(), 719.0);
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == Errc::OffSensor || e.code() == Errc::NoConvergence) << e.what();
    }
  }
}

namespace {

constexpr const char* kCalib = R"(# rgb -> dvs
cam_rgb.fx = 1010.5
cam_rgb.fy = 1008
cam_rgb.cx = 641
cam_rgb.cy = 359.5
cam_rgb.dist = -0.12 0.03 0.001 -0.0005
cam_rgb.size = 1280 720
cam_dvs.fx = 1700
cam_dvs.fy = 1700
cam_dvs.cx = 640
cam_dvs.cy = 360
cam_dvs.dist = 0 0 0 0
cam_dvs.size = 1280 720
extrinsics.R = 1 0 0 0 1 0 0 0 1
extrinsics.t = 0.05 0 0
)";

std::string with_rotation(const Eigen::Matrix3d& r) {
  std::string text = kCalib;
  const auto at = text.find("extrinsics.R");
  const auto end = text.find('\n', at);
  std::ostringstream row;
  row.precision(17);
  row << "extrinsics.R =";
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) row << ' ' << r(i, j);
  }
  return text.replace(at, end - at, row.str());
}

}  // namespace

TEST(Calibration, LoadsFields) {
  const auto p = load_calibration(std::string_view(kCalib));
  EXPECT_EQ(p.rgb.intrinsics.fx, 1010.5);
  EXPECT_EQ(p.rgb.intrinsics.cy, 359.5);
  EXPECT_EQ(p.rgb.distortion.k1, -0.12);
  EXPECT_EQ(p.rgb.distortion.p2, -0.0005);
  EXPECT_EQ(p.dvs.intrinsics.fx, 1700.0);
  EXPECT_EQ(p.dvs.geometry, kEvk4Geometry);
  EXPECT_EQ(p.extrinsics.translation.x(), 0.05);
  EXPECT_TRUE(p.extrinsics.rotation.isIdentity(0.0));
}

TEST(Calibration, FormatRoundTrip) {
  std::mt19937_64 rng(7);
  const auto p = random_pair(rng, 5.0, 0.2, 0.01);
  const auto q = load_calibration(std::string_view(format_calibration(p)));
  EXPECT_EQ(q.rgb.intrinsics.fx, p.rgb.intrinsics.fx);
  EXPECT_EQ(q.dvs.distortion.k2, p.dvs.distortion.k2);
  EXPECT_LE((q.extrinsics.rotation - p.extrinsics.rotation).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Calibration, ReflectionRejected) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  r(2, 2) = -1.0;
  EXPECT_ERRC(load_calibration(std::string_view(with_rotation(r))), Errc::NonOrthonormalRotation);
  EXPECT_ERRC(load_calibration(std::string_view(with_rotation(1.01 * Eigen::Matrix3d::Identity()))),
              Errc::NonOrthonormalRotation);
}

TEST(Calibration, SlightlyOffRotationIsReorthonormalized) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d r = to_eigen(oracle::axis_angle(u(rng), u(rng), u(rng), u(rng)));
    Eigen::Matrix3d noisy = r;
    for (int i = 0; i < 9; ++i) noisy.data()[i] += 1e-8 * u(rng);
    const auto p = load_calibration(std::string_view(with_rotation(noisy)));
    const Eigen::Matrix3d& got = p.extrinsics.rotation;
    EXPECT_LE((got.transpose() * got - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(got.determinant(), 1.0, 1e-14);
    EXPECT_LE((got - oracle::polar_rotation(noisy)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Calibration, MissingField) {
  std::string text = kCalib;
  text.erase(text.find("cam_dvs.fy"), text.find('\n', text.find("cam_dvs.fy")) - text.find("cam_dvs.fy"));
  EXPECT_ERRC(load_calibration(std::string_view(text)), Errc::MissingField);
}
