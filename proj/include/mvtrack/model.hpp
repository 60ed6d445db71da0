#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mvtrack {

using Vec2 = Eigen::Vector2d;

/// Frame index. The pipeline runs at 1 Hz, so a frame index is also a time in
/// whole seconds.
using Frame = std::int64_t;

inline constexpr std::size_t kNumKeypoints = 17;

/// COCO keypoint order. The numeric values are the array positions used by
/// Pose2D and by the detections file format.
enum class Joint : std::size_t {
  Nose = 0,
  LeftEye,
  RightEye,
  LeftEar,
  RightEar,
  LeftShoulder,
  RightShoulder,
  LeftElbow,
  RightElbow,
  LeftWrist,
  RightWrist,
  LeftHip,
  RightHip,
  LeftKnee,
  RightKnee,
  LeftAnkle,
  RightAnkle,
};

inline constexpr std::array<std::string_view, kNumKeypoints> kJointNames = {
    "nose",           "left_eye",      "right_eye",  "left_ear",    "right_ear",
    "left_shoulder",  "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
    "right_wrist",    "left_hip",      "right_hip",  "left_knee",   "right_knee",
    "left_ankle",     "right_ankle"};

/// Index of the left/right counterpart of each joint (nose maps to itself).
inline constexpr std::array<std::size_t, kNumKeypoints> kMirrorJoint = {
    0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15};

constexpr std::size_t index(Joint j) { return static_cast<std::size_t>(j); }

struct Keypoint {
  double u = 0.0;
  double v = 0.0;
  double confidence = 0.0;
  // Consumers ignore u/v when false.
  bool visible = false;

  Vec2 pixel() const { return {u, v}; }
};

struct Pose2D {
  std::array<Keypoint, kNumKeypoints> keypoints{};

  Keypoint& operator[](Joint j) { return keypoints[index(j)]; }
  const Keypoint& operator[](Joint j) const { return keypoints[index(j)]; }
  Keypoint& operator[](std::size_t i) { return keypoints[i]; }
  const Keypoint& operator[](std::size_t i) const { return keypoints[i]; }

  /// Same pose with every left keypoint exchanged for its right counterpart.
  Pose2D mirrored() const;

  std::size_t visible_count() const;
};

/// True iff there are exactly 17 keypoints and every confidence is in [0,1].
bool validate_pose(std::span<const Keypoint> keypoints);
bool validate_pose(const Pose2D& pose);

/// Axis-aligned square in pixels.
struct BoundingBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double side = 0.0;

  bool contains(const Vec2& p, double tol = 1e-9) const {
    return p.x() >= u_min - tol && p.x() <= u_min + side + tol &&
           p.y() >= v_min - tol && p.y() <= v_min + side + tol;
  }
};

/// Tight square around the visible keypoints, grown by `inflate` (0.1 = +10%
/// side length) about its centre. Zero-size box at the origin when nothing is
/// visible.
BoundingBox tight_square(const Pose2D& pose, double inflate = 0.0);

struct PoseDetection {
  std::string camera_id;
  Frame t = 0;
  Pose2D pose;
  BoundingBox bbox;
  /// Chest facing in degrees relative to the camera viewpoint: 0 faces along
  /// the optical axis (away from the camera), 180 faces the camera.
  std::optional<double> orientation_cam_deg;
};

/// A fused (location, orientation) sample in site coordinates.
struct WorldObservation {
  Frame t = 0;
  Vec2 location = Vec2::Zero();
  std::optional<Vec2> orientation;
  std::vector<std::string> source_cameras;
  double weight_mass = 0.0;
};

enum class TrackStatus { Active, Coasting, Finished };

/// One time step of a track. The orientation is kept unit-norm by every
/// constructor and setter.
class TrackState {
 public:
  Frame t = 0;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 angular_velocity = Vec2::Zero();
  /// Position/velocity covariance, ordered [l_x, l_y, v_x, v_y].
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  bool observed = true;

  TrackState() = default;
  TrackState(Frame t, const Vec2& position, const Vec2& velocity, const Vec2& orientation,
             const Vec2& angular_velocity, const Eigen::Matrix4d& covariance, bool observed);

  const Vec2& orientation() const { return orientation_; }
  /// Normalises `o`; a zero vector leaves the current orientation in place.
  void set_orientation(const Vec2& o);

 private:
  Vec2 orientation_{0.0, 1.0};
};

struct Track {
  int track_id = 0;
  std::vector<TrackState> states;
  TrackStatus status = TrackStatus::Active;
};

struct GroundTruthRecord {
  Frame t = 0;
  std::string person_id;
  Vec2 location = Vec2::Zero();
  double orientation_deg = 0.0;
  std::optional<std::string> area_id;
};

// Angles. Site frame: +x east, +y north. Headings are degrees clockwise from
// north, so 0 = (0,1) and 90 = (1,0).

/// Maps any finite angle into [0,360).
double wrap_degrees(double deg);
Vec2 heading_to_vector(double heading_deg);
/// Heading of a non-zero vector, in [0,360).
double vector_to_heading(const Vec2& v);

}  // namespace mvtrack
