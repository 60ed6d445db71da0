#include "mvtrack/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mvtrack {

Pose2D Pose2D::mirrored() const {
  Pose2D out;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) out.keypoints[i] = keypoints[kMirrorJoint[i]];
  return out;
}

std::size_t Pose2D::visible_count() const {
  return static_cast<std::size_t>(
      std::count_if(keypoints.begin(), keypoints.end(), [](const Keypoint& k) { return k.visible; }));
}

bool validate_pose(std::span<const Keypoint> keypoints) {
  if (keypoints.size() != kNumKeypoints) return false;
  return std::all_of(keypoints.begin(), keypoints.end(), [](const Keypoint& k) {
    return k.confidence >= 0.0 && k.confidence <= 1.0;
  });
}

bool validate_pose(const Pose2D& pose) { return validate_pose(std::span<const Keypoint>(pose.keypoints)); }

BoundingBox tight_square(const Pose2D& pose, double inflate) {
  double u0 = std::numeric_limits<double>::infinity();
  double v0 = u0;
  double u1 = -u0;
  double v1 = -u0;
  for (const auto& k : pose.keypoints) {
    if (!k.visible) continue;
    u0 = std::min(u0, k.u);
    v0 = std::min(v0, k.v);
    u1 = std::max(u1, k.u);
    v1 = std::max(v1, k.v);
  }
  if (u0 > u1) return {};
  const double side = std::max(u1 - u0, v1 - v0) * (1.0 + inflate);
  const double cu = 0.5 * (u0 + u1);
  const double cv = 0.5 * (v0 + v1);
  return {cu - 0.5 * side, cv - 0.5 * side, side};
}

TrackState::TrackState(Frame t_, const Vec2& position_, const Vec2& velocity_, const Vec2& orientation,
                       const Vec2& angular_velocity_, const Eigen::Matrix4d& covariance_, bool observed_)
    : t(t_),
      position(position_),
      velocity(velocity_),
      angular_velocity(angular_velocity_),
      covariance(covariance_),
      observed(observed_) {
  set_orientation(orientation);
}

void TrackState::set_orientation(const Vec2& o) {
  const double n = o.norm();
  if (n > 0.0 && std::isfinite(n)) orientation_ = o / n;
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  // Map a rounded-up 360 back to 0.
  if (w >= 360.0) w -= 360.0;
  return w;
}

Vec2 heading_to_vector(double heading_deg) {
  const double r = heading_deg * std::numbers::pi / 180.0;
  return {std::sin(r), std::cos(r)};
}

double vector_to_heading(const Vec2& v) {
  return wrap_degrees(std::atan2(v.x(), v.y()) * 180.0 / std::numbers::pi);
}

}  // namespace mvtrack
