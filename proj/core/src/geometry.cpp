#include "evflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "evflow/error.hpp"

namespace evflow {

Eigen::Matrix3d Intrinsics::matrix() const noexcept {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Vector2d distort(const Eigen::Vector2d& pt, const Distortion& d) noexcept {
  const double x = pt.x();
  const double y = pt.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + d.k1 * r2 + d.k2 * r2 * r2;
  return {x * radial + 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x),
          y * radial + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y};
}

Eigen::Matrix2d distort_jacobian(const Eigen::Vector2d& pt, const Distortion& d) noexcept {
  const double x = pt.x();
  const double y = pt.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + d.k1 * r2 + d.k2 * r2 * r2;
  const double dradial = d.k1 + 2.0 * d.k2 * r2;  // d(radial)/d(r2)
  Eigen::Matrix2d j;
  j(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * d.p1 * y + 6.0 * d.p2 * x;
  j(0, 1) = 2.0 * x * y * dradial + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
  j(1, 0) = 2.0 * x * y * dradial + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
  j(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * d.p1 * y + 2.0 * d.p2 * x;
  return j;
}

namespace {

// The radial profile r * (1 + k1 r^2 + k2 r^4) must be increasing on [0, r]
// for the solution to be the principal inverse.
bool before_fold(double r, const Distortion& d) noexcept {
  constexpr int kSamples = 32;
  for (int i = 1; i <= kSamples; ++i) {
    const double s2 = (r * i / kSamples) * (r * i / kSamples);
    if (1.0 + 3.0 * d.k1 * s2 + 5.0 * d.k2 * s2 * s2 <= 0.0) return false;
  }
  return true;
}

}  // namespace

Eigen::Vector2d undistort(const Eigen::Vector2d& pt, const Distortion& d) {
  if (d.is_zero()) return pt;
  Eigen::Vector2d x = pt;
  Eigen::Vector2d residual = distort(x, d) - pt;
  double err = residual.norm();
  for (int iter = 0; iter < kUndistortMaxIterations && err > 1e-15; ++iter) {
    const Eigen::Matrix2d jac = distort_jacobian(x, d);
    if (std::abs(jac.determinant()) < 1e-12) break;
    const Eigen::Vector2d step = jac.inverse() * residual;
    double scale = 1.0;
    Eigen::Vector2d candidate = x - step;
    Eigen::Vector2d cand_res = distort(candidate, d) - pt;
    for (int halving = 0; halving < 10 && cand_res.norm() > err; ++halving) {
      scale *= 0.5;
      candidate = x - scale * step;
      cand_res = distort(candidate, d) - pt;
    }
    x = candidate;
    residual = cand_res;
    err = residual.norm();
  }
  if (!(err <= kUndistortTolerance) || !before_fold(x.norm(), d)) {
    std::ostringstream msg;
    msg << "undistort did not converge at (" << pt.x() << ", " << pt.y() << "), residual " << err;
    raise(Errc::NoConvergence, msg.str());
  }
  return x;
}

Eigen::Vector2d transfer_point(const Eigen::Vector2d& px, const CameraPair& pair) {
  const Eigen::Vector2d n_rgb =
      undistort(pair.rgb.intrinsics.to_normalized(px), pair.rgb.distortion);
  const Eigen::Vector3d ray = pair.extrinsics.rotation * Eigen::Vector3d(n_rgb.x(), n_rgb.y(), 1.0);
  if (ray.z() <= 0.0) raise(Errc::BehindCamera, "transferred ray points away from the DVS camera");
  const Eigen::Vector2d n_dvs(ray.x() / ray.z(), ray.y() / ray.z());
  return pair.dvs.intrinsics.to_pixel(distort(n_dvs, pair.dvs.distortion));
}

TransferredBox transfer_bbox(const BBox& box, const CameraPair& pair) {
  const Eigen::Vector2d corners[4] = {
      {box.x, box.y}, {box.right(), box.y}, {box.x, box.bottom()}, {box.right(), box.bottom()}};
  double min_x = INFINITY, min_y = INFINITY, max_x = -INFINITY, max_y = -INFINITY;
  for (const auto& c : corners) {
    const auto p = transfer_point(c, pair);
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  const double lim_x = pair.dvs.geometry.width - 1.0;
  const double lim_y = pair.dvs.geometry.height - 1.0;
  if (max_x < 0.0 || max_y < 0.0 || min_x > lim_x || min_y > lim_y) {
    raise(Errc::OffSensor, "transferred box lies outside the DVS sensor");
  }
  TransferredBox out;
  const double x0 = std::clamp(min_x, 0.0, lim_x);
  const double x1 = std::clamp(max_x, 0.0, lim_x);
  const double y0 = std::clamp(min_y, 0.0, lim_y);
  const double y1 = std::clamp(max_y, 0.0, lim_y);
  out.partial = x0 != min_x || x1 != max_x || y0 != min_y || y1 != max_y;
  out.box = BBox{x0, y0, x1 - x0, y1 - y0};
  out.degenerate = out.box.area() <= 0.0;
  return out;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

CameraModel load_camera(const KeyValueDoc& doc, const std::string& prefix) {
  CameraModel cam;
  cam.intrinsics.fx = doc.require_double(prefix + ".fx");
  cam.intrinsics.fy = doc.require_double(prefix + ".fy");
  cam.intrinsics.cx = doc.require_double(prefix + ".cx");
  cam.intrinsics.cy = doc.require_double(prefix + ".cy");
  if (!cam.intrinsics.valid()) raise(Errc::ConfigInvalid, prefix + ": focal lengths must be positive");
  const auto dist = doc.require_doubles(prefix + ".dist", 4);
  cam.distortion = {dist[0], dist[1], dist[2], dist[3]};
  for (double c : dist) {
    if (!std::isfinite(c)) raise(Errc::ConfigInvalid, prefix + ".dist must be finite");
  }
  const auto size = doc.require_doubles(prefix + ".size", 2);
  if (size[0] < 1 || size[1] < 1 || size[0] > 65535 || size[1] > 65535 ||
      size[0] != std::floor(size[0]) || size[1] != std::floor(size[1])) {
    raise(Errc::ConfigInvalid, prefix + ".size must be two positive integers");
  }
  cam.geometry = {static_cast<std::uint16_t>(size[0]), static_cast<std::uint16_t>(size[1])};
  return cam;
}

}  // namespace

CameraPair load_calibration(const KeyValueDoc& doc) {
  CameraPair pair;
  pair.rgb = load_camera(doc, "cam_rgb");
  pair.dvs = load_camera(doc, "cam_dvs");
  const auto r = doc.require_doubles("extrinsics.R", 9);
  const auto t = doc.require_doubles("extrinsics.t", 3);
  Eigen::Matrix3d rot;
  rot << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  const double off = (rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(off <= kRotationTolerance) || rot.determinant() <= 0.0) {
    std::ostringstream msg;
    msg << "extrinsics.R is not a rotation (|R^T R - I| = " << off << ", det = " << rot.determinant() << ")";
    raise(Errc::NonOrthonormalRotation, msg.str());
  }
  pair.extrinsics.rotation = nearest_rotation(rot);
  pair.extrinsics.translation = Eigen::Vector3d(t[0], t[1], t[2]);
  return pair;
}

CameraPair load_calibration(std::string_view text) { return load_calibration(KeyValueDoc::parse(text)); }

std::string format_calibration(const CameraPair& pair) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto camera = [&out](const std::string& prefix, const CameraModel& cam) {
    out << prefix << ".fx = " << cam.intrinsics.fx << '\n'
        << prefix << ".fy = " << cam.intrinsics.fy << '\n'
        << prefix << ".cx = " << cam.intrinsics.cx << '\n'
        << prefix << ".cy = " << cam.intrinsics.cy << '\n'
        << prefix << ".dist = " << cam.distortion.k1 << ' ' << cam.distortion.k2 << ' '
        << cam.distortion.p1 << ' ' << cam.distortion.p2 << '\n'
        << prefix << ".size = " << cam.geometry.width << ' ' << cam.geometry.height << '\n';
  };
  camera("cam_rgb", pair.rgb);
  camera("cam_dvs", pair.dvs);
  out << "extrinsics.R =";
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out << ' ' << pair.extrinsics.rotation(i, j);
  }
  out << "\nextrinsics.t = " << pair.extrinsics.translation.x() << ' '
      << pair.extrinsics.translation.y() << ' ' << pair.extrinsics.translation.z() << '\n';
  return out.str();
}

}  // namespace evflow
