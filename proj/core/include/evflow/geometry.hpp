#pragma once

#include <string>

#include <Eigen/Core>

#include "evflow/event_stream.hpp"
#include "evflow/kv_config.hpp"
#include "evflow/labels.hpp"

namespace evflow {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  bool valid() const noexcept { return fx > 0.0 && fy > 0.0; }
  Eigen::Vector2d to_normalized(const Eigen::Vector2d& px) const noexcept {
    return {(px.x() - cx) / fx, (px.y() - cy) / fy};
  }
  Eigen::Vector2d to_pixel(const Eigen::Vector2d& n) const noexcept {
    return {fx * n.x() + cx, fy * n.y() + cy};
  }
  Eigen::Matrix3d matrix() const noexcept;
};

// Radial-tangential (Brown-Conrady) coefficients.
struct Distortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  bool is_zero() const noexcept { return k1 == 0.0 && k2 == 0.0 && p1 == 0.0 && p2 == 0.0; }
};

// Maps camera-1 (RGB) coordinates into camera-2 (DVS) coordinates:
// X_dvs = rotation * X_rgb + translation.
struct Extrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct CameraModel {
  Intrinsics intrinsics;
  Distortion distortion;
  SensorGeometry geometry;
};

struct CameraPair {
  CameraModel rgb;
  CameraModel dvs;
  Extrinsics extrinsics;
};

inline constexpr double kUndistortTolerance = 1e-6;
inline constexpr int kUndistortMaxIterations = 20;

Eigen::Vector2d distort(const Eigen::Vector2d& pt, const Distortion& d) noexcept;

// Jacobian of distort() at pt.
Eigen::Matrix2d distort_jacobian(const Eigen::Vector2d& pt, const Distortion& d) noexcept;

// Damped Newton inverse of distort(). Raises NoConvergence when the residual
// stays above kUndistortTolerance after kUndistortMaxIterations, or when the
// only solution found lies past the fold of the radial profile.
Eigen::Vector2d undistort(const Eigen::Vector2d& pt, const Distortion& d);

// Zero-disparity transfer of an RGB pixel into the DVS image: back-project,
// rotate (translation is ignored), re-project. The result may fall outside the
// DVS sensor. BehindCamera if the rotated ray has non-positive depth.
Eigen::Vector2d transfer_point(const Eigen::Vector2d& px, const CameraPair& pair);

struct TransferredBox {
  BBox box;
  bool partial = false;     // the hull was clamped to the sensor
  bool degenerate = false;  // zero area after clamping
};

// Axis-aligned hull of the four transferred corners clamped to
// [0, width - 1] x [0, height - 1]. OffSensor if the hull misses the sensor.
TransferredBox transfer_bbox(const BBox& box, const CameraPair& pair);

// Tolerance on |R^T R - I| for accepting a loaded rotation.
inline constexpr double kRotationTolerance = 1e-6;

// Nearest rotation (polar factor) of a near-orthonormal matrix.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

// Parses cam_rgb.* / cam_dvs.* / extrinsics.* keys.
CameraPair load_calibration(const KeyValueDoc& doc);
CameraPair load_calibration(std::string_view text);
std::string format_calibration(const CameraPair& pair);

}  // namespace evflow
