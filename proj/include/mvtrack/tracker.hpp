#pragma once

#include "mvtrack/filtering.hpp"
#include "mvtrack/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mvtrack::tracker {

enum class OrientationMode {
  /// Motion term uses the unit velocity direction, and only above min_speed.
  Normalized,
  /// Motion term uses the raw velocity vector.
  Literal,
};

struct TrackerConfig {
  /// Association gate in metres.
  double gate = 1.5;
  int max_coast = 10;
  double w_motion = 0.1;
  double dt = 1.0;
  double process_accel_sigma = 0.5;  // m/s^2
  double measurement_sigma = 0.5;    // m
  double velocity_sigma = 1.42;      // m/s, prior on a new track
  filtering::VelocityInit velocity_init = filtering::VelocityInit::TwoPoint;
  OrientationMode orientation_mode = OrientationMode::Normalized;
  /// Below this speed the motion term is dropped (normalized mode).
  double min_speed = 0.05;
  /// Spherical blend factor from the predicted orientation toward an observed one.
  double orientation_blend = 0.7;

  /// Throws ValidationError on a non-positive gate, dt or sigma, a negative
  /// max_coast or w_motion, or a blend outside [0,1].
  void validate() const;
  filtering::LinearCVModel model() const;
};

/// O + w m + dt O_dot, renormalised, where m is the motion term chosen by the
/// orientation mode. Returns `o` unchanged if the sum vanishes.
Vec2 advance_orientation(const Vec2& o, const Vec2& velocity, const Vec2& angular_velocity, const TrackerConfig& cfg);

/// Spherical interpolation between unit vectors: 0 gives `from`, 1 gives `to`.
/// Antipodal inputs rotate clockwise.
Vec2 slerp(const Vec2& from, const Vec2& to, double factor);

/// A single association made by the tracker, kept for inspection.
struct MatchRecord {
  Frame t = 0;
  int track_id = 0;
  Vec2 predicted = Vec2::Zero();
  Vec2 observed = Vec2::Zero();
};

/// The Kalman tracker as a sequential state machine.
class KalmanTracker {
 public:
  explicit KalmanTracker(TrackerConfig cfg);
  ~KalmanTracker();
  KalmanTracker(KalmanTracker&&) noexcept;
  KalmanTracker& operator=(KalmanTracker&&) noexcept;

  /// Predict, associate, update, spawn and retire for frame `t`. Throws
  /// NonMonotonicTime unless `t` is the previous frame plus one.
  void step(Frame t, std::span<const WorldObservation> observations);

  /// Finalises every live track. The tracker is empty afterwards.
  void flush();

  /// Tracks finished so far, smoothed, ordered by id.
  std::vector<Track> finished() const;
  /// Ids of live tracks.
  std::vector<int> live_ids() const;
  const std::vector<MatchRecord>& matches() const { return matches_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  struct Live;
  Track finalize(Live& live) const;

  TrackerConfig cfg_;
  std::vector<Live> live_;
  std::vector<Track> finished_;
  std::vector<MatchRecord> matches_;
  std::optional<Frame> last_t_;
  int next_id_ = 1;
};

/// Runs the Kalman tracker over a stream ordered by frame. Frames without
/// observations between the first and last are stepped as empty. Throws
/// NonMonotonicTime if the stream is out of order.
std::vector<Track> run(std::span<const WorldObservation> observations, const TrackerConfig& cfg = {});

/// Frame-by-frame gated Hungarian linking with one-frame gap bridging by
/// linear interpolation. No filtering, no smoothing.
std::vector<Track> baseline_hungarian_run(std::span<const WorldObservation> observations, double gate = 1.5);

}  // namespace mvtrack::tracker
