#pragma once

#include "mvtrack/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvtrack::preproc {

struct PoseTrackerConfig {
  double dt = 1.0;
  double process_accel_sigma = 50.0;  // px/s^2
  double measurement_sigma = 5.0;     // px
  /// Used for the default gate (width/8) and the velocity prior (width/4 px/s).
  int image_width = 1280;
  /// Mean per-keypoint distance gate in pixels; defaults to image_width / 8.
  std::optional<double> gate_px;
  int max_coast = 10;
  std::size_t min_shared_keypoints = 3;
  bool flip_correction = true;
  double flip_margin_px = 1.0;

  double gate() const { return gate_px ? *gate_px : image_width / 8.0; }
  double velocity_sigma() const { return image_width / 4.0; }
};

struct PixelFrame {
  Frame t = 0;
  /// Smoothed pose. Visibility follows the detection on observed frames and
  /// the keypoints known so far on coasted frames.
  Pose2D pose;
  bool observed = false;
  /// The matched detection after left/right correction (observed frames only).
  std::optional<Pose2D> raw;
  /// True when the detection's left and right sides were exchanged.
  bool swapped = false;
  /// Index into the tracker's input span.
  std::optional<std::size_t> detection_index;
  std::optional<double> orientation_cam_deg;
};

struct PixelTrack {
  int track_id = 0;
  std::string camera_id;
  /// Contiguous frames from the first to the last observation.
  std::vector<PixelFrame> frames;
  TrackStatus status = TrackStatus::Finished;
};

struct PoseDistance {
  double mean = 0.0;
  std::size_t shared = 0;
};

/// Mean Euclidean distance over keypoints visible in both poses.
PoseDistance pose_distance(const Pose2D& a, const Pose2D& b);

/// Returns `detection` or its mirrored variant, whichever is closer to the
/// prediction; the mirror is taken only when closer by more than `margin_px`.
Pose2D correct_lr_flip(const Pose2D& prediction, const Pose2D& detection, double margin_px = 1.0);

/// Unit image-plane vector from the mean of the visible eyes/ears to the nose.
std::optional<Vec2> heuristic_orientation(const Pose2D& pose);

/// Kalman/Hungarian pose tracking for one camera's detections (any order).
/// Finished tracks are RTS-smoothed.
std::vector<PixelTrack> track_poses(std::span<const PoseDetection> detections, const PoseTrackerConfig& cfg);

/// A track is a ghost when it has at least `window` observed frames and the
/// mean keypoint displacement between consecutive observations never reaches
/// `eps` pixels over its whole life.
bool is_stationary_ghost(const PixelTrack& track, int window, double eps);

std::vector<PixelTrack> remove_stationary_ghosts(std::vector<PixelTrack> tracks, int window, double eps);

/// Stream form: tracks the detections and drops every detection that belongs
/// to a ghost track. Survivors are returned unchanged, in input order.
std::vector<PoseDetection> remove_stationary_ghosts(std::span<const PoseDetection> stream,
                                                    const PoseTrackerConfig& cfg, int window, double eps);

/// Smoothed detections from tracks. Coasted frames inside a track become
/// detections only when `fill_gaps` is set. Boxes are the tight square over
/// visible keypoints grown by `bbox_inflate`.
std::vector<PoseDetection> to_detections(const std::vector<PixelTrack>& tracks, bool fill_gaps = true,
                                         double bbox_inflate = 0.1);

struct PreprocessConfig {
  PoseTrackerConfig tracker;
  int ghost_window = 10;
  double ghost_eps = 2.0;
  bool fill_gaps = true;
  double bbox_inflate = 0.1;
};

/// Ghost removal, tracking and smoothing for one camera.
std::vector<PoseDetection> preprocess_camera(std::span<const PoseDetection> detections, const PreprocessConfig& cfg);

}  // namespace mvtrack::preproc
