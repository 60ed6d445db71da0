#include "mvtrack/geometry.hpp"

#include "mvtrack/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace mvtrack::geometry {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Similarity transform taking the points to zero mean and unit RMS radius.
Eigen::Matrix3d normalizing_transform(std::span<const Vec2, 4> pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= 4.0;
  double rms = 0.0;
  for (const auto& p : pts) rms += (p - mean).squaredNorm();
  rms = std::sqrt(rms / 4.0);
  const double s = rms > 0.0 ? 1.0 / rms : 1.0;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * mean.x(), 0.0, s, -s * mean.y(), 0.0, 0.0, 1.0;
  return t;
}

bool has_collinear_triple(std::span<const Vec2, 4> pts) {
  double extent = 0.0;
  for (const auto& a : pts)
    for (const auto& b : pts) extent = std::max(extent, (a - b).norm());
  if (extent == 0.0) return true;
  constexpr std::array<std::array<int, 3>, 4> triples = {{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
  for (const auto& tr : triples) {
    const Vec2 ab = pts[tr[1]] - pts[tr[0]];
    const Vec2 ac = pts[tr[2]] - pts[tr[0]];
    const double cross = ab.x() * ac.y() - ab.y() * ac.x();
    if (std::abs(cross) <= 1e-10 * extent * extent) return true;
  }
  return false;
}

Vec2 transform(const Eigen::Matrix3d& t, const Vec2& p) { return (t * p.homogeneous()).hnormalized(); }

}  // namespace

Homography Homography::from_matrix(const Eigen::Matrix3d& raw) {
  if (!raw.allFinite()) throw DegenerateConfiguration("homography has non-finite entries");
  if (std::abs(raw(2, 2)) <= 1e-12 * raw.cwiseAbs().maxCoeff())
    throw DegenerateConfiguration("homography cannot be normalised: m33 vanishes");
  Eigen::Matrix3d m = raw / raw(2, 2);
  Eigen::Matrix3d scaled = m;
  for (int r = 0; r < 3; ++r) {
    const double row_max = scaled.row(r).cwiseAbs().maxCoeff();
    if (row_max == 0.0) throw DegenerateConfiguration("homography has a zero row");
    scaled.row(r) /= row_max;
  }
  for (int c = 0; c < 3; ++c) {
    const double col_max = scaled.col(c).cwiseAbs().maxCoeff();
    if (col_max == 0.0) throw DegenerateConfiguration("homography has a zero column");
    scaled.col(c) /= col_max;
  }
  if (std::abs(scaled.determinant()) <= 1e-9) throw DegenerateConfiguration("homography is singular");
  return Homography{m};
}

Homography Homography::inverse() const { return from_matrix(m.inverse()); }

Homography fit_homography(std::span<const Vec2, 4> pixel_points, std::span<const Vec2, 4> world_points) {
  if (has_collinear_triple(pixel_points))
    throw DegenerateConfiguration("three pixel calibration points are collinear");
  if (has_collinear_triple(world_points))
    throw DegenerateConfiguration("three world calibration points are collinear");

  // Conditioning: solve between normalised point sets, then undo.
  const Eigen::Matrix3d tp = normalizing_transform(pixel_points);
  const Eigen::Matrix3d tw = normalizing_transform(world_points);

  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const Vec2 p = transform(tp, pixel_points[i]);
    const Vec2 w = transform(tw, world_points[i]);
    const double u = p.x(), v = p.y(), x = w.x(), y = w.y();
    a.row(2 * i) << u, v, 1.0, 0.0, 0.0, 0.0, -u * x, -v * x;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, u, v, 1.0, -u * y, -v * y;
    b(2 * i) = x;
    b(2 * i + 1) = y;
  }
  const Eigen::PartialPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!(std::abs(lu.determinant()) > 1e-12))
    throw DegenerateConfiguration("calibration system is singular");
  const Eigen::Matrix<double, 8, 1> sol = lu.solve(b);
  if (!sol.allFinite() || !(a * sol).isApprox(b, 1e-8))
    throw DegenerateConfiguration("calibration system is singular");

  Eigen::Matrix3d hn;
  hn << sol(0), sol(1), sol(2), sol(3), sol(4), sol(5), sol(6), sol(7), 1.0;
  return Homography::from_matrix(tw.inverse() * hn * tp);
}

Vec2 apply_homography(const Homography& h, const Vec2& p) {
  const Eigen::Vector3d q = h.m * p.homogeneous();
  if (std::abs(q.z()) <= 1e-12) throw HorizonPoint("point maps to infinity under the homography");
  return q.head<2>() / q.z();
}

Vec2 foot_point(const Pose2D& pose) {
  const Keypoint& l = pose[Joint::LeftAnkle];
  const Keypoint& r = pose[Joint::RightAnkle];
  if (l.visible && r.visible) return 0.5 * (l.pixel() + r.pixel());
  if (l.visible) return l.pixel();
  if (r.visible) return r.pixel();
  throw NoFeetVisible("neither ankle is visible");
}

void CameraModel::validate() const {
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0) || !(vfov_deg > 0.0 && vfov_deg < 180.0))
    throw ValidationError("camera " + camera_id + ": field of view must be inside (0,180) degrees");
  if (image_size.width <= 0 || image_size.height <= 0)
    throw ValidationError("camera " + camera_id + ": image size must be positive");
}

Vec2 rotate_to_world(const CameraModel& cam, const Vec2& v_cam) {
  // Clockwise rotation by yaw in the heading convention.
  const double c = std::cos(cam.yaw_deg * kDegToRad);
  const double s = std::sin(cam.yaw_deg * kDegToRad);
  const Vec2 r{c * v_cam.x() + s * v_cam.y(), -s * v_cam.x() + c * v_cam.y()};
  return r.normalized();
}

Vec2 project_direction(const Homography& h, const Vec2& origin_px, const Vec2& dir_px) {
  const Vec2 a = apply_homography(h, origin_px);
  const Vec2 b = apply_homography(h, origin_px + dir_px);
  return (b - a).normalized();
}

GeometryFactors geometry_factors(const CameraModel& cam, const Vec2& world_pos, const Vec2& facing,
                                 const Vec2& pixel_foot) {
  GeometryFactors f;
  const Vec2 to_camera = cam.position - world_pos;
  f.distance = to_camera.norm();
  if (f.distance > 0.0 && facing.norm() > 0.0) {
    const double c = std::clamp(facing.normalized().dot(to_camera / f.distance), -1.0, 1.0);
    f.facing_angle_deg = std::acos(c) / kDegToRad;
  }

  const double half_h = 0.5 * cam.hfov_deg * kDegToRad;
  const double half_v = 0.5 * cam.vfov_deg * kDegToRad;
  const double fx = 0.5 * cam.image_size.width / std::tan(half_h);
  const double fy = 0.5 * cam.image_size.height / std::tan(half_v);
  const double du = pixel_foot.x() - 0.5 * cam.image_size.width;
  const double dv = pixel_foot.y() - 0.5 * cam.image_size.height;
  f.h_norm = std::abs(std::atan(du / fx)) / half_h;
  f.v_norm = std::abs(std::atan(dv / fy)) / half_v;
  return f;
}

}  // namespace mvtrack::geometry
