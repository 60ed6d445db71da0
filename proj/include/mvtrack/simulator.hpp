#pragma once

#include "mvtrack/geometry.hpp"
#include "mvtrack/model.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvtrack::sim {

inline constexpr double kMaxWalkingSpeed = 1.42;  // m/s

/// A waypoint. A non-empty `hold_deg` keeps the person here for one second
/// per entry, facing each listed heading in turn.
struct PathNode {
  Vec2 point = Vec2::Zero();
  std::vector<double> hold_deg;
};

struct PersonSpec {
  std::string person_id;
  std::vector<PathNode> waypoints;
  double speed = 1.0;  // m/s
  Frame start_t = 0;
  std::optional<std::string> area_id;
};

/// Pinhole camera looking down at the floor plane z = 0.
struct CameraSpec {
  std::string camera_id;
  Vec2 position = Vec2::Zero();
  double mount_height = 3.0;
  /// Heading of the optical axis, degrees clockwise from north.
  double yaw_deg = 0.0;
  /// Depression of the optical axis below horizontal; 90 looks straight down.
  double pitch_deg = 30.0;
  geometry::ImageSize image_size{1280, 720};
  double hfov_deg = 90.0;
  double max_range = 20.0;

  /// Focal length in pixels from the horizontal field of view.
  double focal_px() const;
  double vfov_deg() const;
  /// Throws ValidationError on non-physical parameters.
  void validate() const;
};

struct NoiseSpec {
  double keypoint_sigma_px = 0.0;
  double fn_base_prob = 0.0;
  /// Added drop probability per metre of camera distance.
  double fn_distance_slope = 0.0;
  double flip_prob = 0.0;
  /// Stationary fake people per camera, present for the whole duration.
  int ghost_count = 0;
  double orientation_sigma_deg = 0.0;
  /// Constant floor offset per camera id, metres.
  std::map<std::string, Vec2> localization_bias;
  /// Floor offset of magnitude proportional to camera distance, random direction.
  double loc_error_per_meter = 0.0;
  /// Isotropic Gaussian floor offset, metres.
  double loc_error_sigma = 0.0;

  /// Throws ValidationError on probabilities outside [0,1] or negative scales.
  void validate() const;
  bool has_floor_offsets() const;
};

struct Site {
  double width = 20.0;
  double height = 20.0;
  bool contains(const Vec2& p, double tol = 1e-9) const {
    return p.x() >= -tol && p.x() <= width + tol && p.y() >= -tol && p.y() <= height + tol;
  }
};

struct Scenario {
  Site site;
  std::vector<PersonSpec> persons;
  std::vector<CameraSpec> cameras;
  NoiseSpec noise;
  /// Frames [0, duration). Zero means as long as the longest path.
  Frame duration = 0;
  std::uint64_t seed = 0;

  /// Validates cameras, noise, speeds and waypoints.
  void validate() const;
};

/// 1 Hz ground truth along the piecewise-linear paths, ordered by (t, person).
/// Throws WaypointOutsideSite or ValidationError.
std::vector<GroundTruthRecord> synthesize_trajectories(const Scenario& s);

/// Camera model whose homography is the exact pixel-to-floor map of the pinhole.
geometry::CameraModel to_camera_model(const CameraSpec& cam);
/// Floor-to-pixel homography of the pinhole.
Eigen::Matrix3d floor_to_pixel(const CameraSpec& cam);

/// Canonical standing skeleton: for each joint, (lateral, forward, height) in
/// metres with lateral positive toward the person's left.
struct SkeletonPoint {
  double lateral;
  double forward;
  double height;
};
extern const std::array<SkeletonPoint, kNumKeypoints> kSkeleton;

/// Noiseless detection of `person` seen by `cam`, or nullopt when the feet are
/// outside the image, behind the camera or beyond max_range. The skeleton is
/// anchored at the image of `anchor` (the person's location unless a floor
/// offset is simulated); visibility is decided on the true location.
std::optional<PoseDetection> project_to_camera(const CameraSpec& cam, const GroundTruthRecord& person,
                                               std::optional<Vec2> anchor = std::nullopt);

/// A simulated detection with the person it came from.
struct LabeledDetection {
  PoseDetection detection;
  /// Ground-truth person, or "ghost:<camera>:<k>" for injected ghosts.
  std::string person_id;
};

/// One injected perturbation.
struct NoiseEvent {
  Frame t = 0;
  std::string camera_id;
  std::string person_id;
  /// drop | flip | keypoint_noise | orientation_noise | ghost | floor_offset
  std::string kind;
  /// Kind-specific magnitude: drop probability, orientation delta in degrees,
  /// offset length in metres; zero otherwise.
  double value = 0.0;
};

struct NoisyDetections {
  std::vector<LabeledDetection> detections;
  std::vector<NoiseEvent> ledger;
};

/// Applies drops, flips, keypoint noise and orientation noise in input order
/// and appends ghosts for frames [t_begin, t_end) of every camera in `cameras`.
/// Identical inputs and seed give identical output.
NoisyDetections inject_noise(std::span<const LabeledDetection> detections, std::span<const CameraSpec> cameras,
                             const NoiseSpec& spec, std::uint64_t seed, Frame t_begin, Frame t_end);

struct SimulationResult {
  std::vector<GroundTruthRecord> ground_truth;
  std::vector<geometry::CameraModel> cameras;
  /// Per camera id, ordered by (t, person).
  std::map<std::string, std::vector<PoseDetection>> detections;
  std::vector<LabeledDetection> labeled;
  std::vector<NoiseEvent> ledger;
};

/// Trajectories, projection into every camera and noise injection.
SimulationResult simulate(const Scenario& s);

/// Directly perturbed floor observations, for exercising the world tracker
/// without cameras.
struct WorldNoise {
  double position_sigma = 0.0;
  double fn_prob = 0.0;
  double orientation_sigma_deg = 0.0;
};

/// One observation per surviving gt record, ordered by frame.
std::vector<WorldObservation> simulate_world_observations(std::span<const GroundTruthRecord> gt,
                                                          const WorldNoise& noise, std::uint64_t seed);

}  // namespace mvtrack::sim
