#pragma once

#include "mvtrack/geometry.hpp"
#include "mvtrack/model.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mvtrack::metrics {

/// One hypothesis (track state) at one frame.
struct HypSample {
  int track_id = 0;
  Vec2 location = Vec2::Zero();
  std::optional<double> orientation_deg;
  bool observed = true;
};

enum class EventKind { Match, Miss, FalsePositive };

/// One entry of the per-frame log. Every ground-truth id and every hypothesis
/// id present in a frame appears in exactly one event. An identity switch is a
/// Match with `switched` set and the previous hypothesis in `previous_hyp`.
struct Event {
  Frame t = 0;
  EventKind kind = EventKind::Match;
  std::optional<std::string> gt_id;
  std::optional<int> hyp_id;
  double distance = 0.0;
  bool switched = false;
  std::optional<int> previous_hyp;
  std::optional<double> gt_orientation_deg;
  std::optional<double> hyp_orientation_deg;
};

/// CLEAR-MOT accumulator with correspondence persistence.
class MotAccumulator {
 public:
  explicit MotAccumulator(double gate = 1.5);

  /// Throws DuplicateId if an id occurs twice on either side, and
  /// std::invalid_argument if a gt record belongs to another frame.
  void accumulate_frame(Frame t, std::span<const GroundTruthRecord> gt, std::span<const HypSample> hyp);

  const std::vector<Event>& events() const { return events_; }
  std::size_t frames() const { return frames_; }
  double gate() const { return gate_; }
  /// Location of every id in every frame it was present, keyed by frame.
  const std::map<std::string, std::map<Frame, Vec2>>& gt_trajectories() const { return gt_traj_; }
  const std::map<int, std::map<Frame, Vec2>>& hyp_trajectories() const { return hyp_traj_; }

 private:
  double gate_;
  std::size_t frames_ = 0;
  std::vector<Event> events_;
  std::map<std::string, int> last_match_;
  std::map<std::string, std::map<Frame, Vec2>> gt_traj_;
  std::map<int, std::map<Frame, Vec2>> hyp_traj_;
};

struct MotSummary {
  std::size_t frames = 0;
  std::size_t gt = 0;
  std::size_t matches = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t ids = 0;
  std::size_t frag = 0;
  std::size_t num_gt_ids = 0;
  std::size_t num_hyp_ids = 0;
  double motp = 0.0;
  double mota = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double idsr = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  std::size_t mt = 0;
  std::size_t ml = 0;
  double mt_ratio = 0.0;
  double ml_ratio = 0.0;
  double idtp = 0.0;
  double idfp = 0.0;
  double idfn = 0.0;
  double idf1 = 0.0;
};

/// Throws EmptyAccumulator when no frame was accumulated.
MotSummary finalize(const MotAccumulator& acc);

/// Largest total IDTP over one-to-one pairings of gt and hyp trajectories,
/// where idtp[g][h] counts frames in which both are present and within the gate.
double max_identity_overlap(const std::vector<std::vector<double>>& idtp);

/// Smallest absolute angle between two headings, in [0,180].
double angular_error(double pred_deg, double gt_deg);

/// Fraction of errors no larger than `x_deg`. Throws EmptyInput on an empty list.
double accuracy_at(std::span<const double> errors_deg, double x_deg);

struct Correlation {
  double r = 0.0;
  /// Two-sided p-value from Student's t with n-2 degrees of freedom.
  double p = 1.0;
  std::size_t n = 0;
};

/// Sample Pearson correlation. Throws std::invalid_argument on unequal lengths
/// and DegenerateVariance on fewer than 3 points or a constant input.
Correlation pearson_r(std::span<const double> xs, std::span<const double> ys);

struct FactorSample {
  std::string camera_id;
  Frame t = 0;
  std::string person_id;
  geometry::GeometryFactors factors;
  double loc_err_m = 0.0;
  std::optional<double> ori_err_deg;
};

inline constexpr std::array<std::string_view, 4> kFactorNames = {"distance", "facing_angle", "h_norm", "v_norm"};

struct FactorCorrelation {
  std::string factor;
  Correlation localization;
  std::optional<Correlation> orientation;
};

/// Pearson r and p of every factor against the localization error, and against
/// the orientation error when at least 3 samples carry one.
std::vector<FactorCorrelation> factor_analysis(std::span<const FactorSample> samples);

struct OrientationSummary {
  std::size_t count = 0;
  double mae_deg = 0.0;
  /// X (degrees) -> Accuracy-X.
  std::map<double, double> acc_at;
};

/// Axis-aligned area of the site.
struct Area {
  std::string id;
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

struct EvalConfig {
  double gate = 1.5;
  std::vector<double> accuracy_x = {5.0, 15.0, 22.5, 30.0, 45.0, 90.0};
  /// Coasted (unobserved) track states count as hypotheses.
  bool count_coasted = true;
  std::vector<Area> areas;

  /// Throws ValidationError on a non-positive gate or an unsorted X-list.
  void validate() const;
};

struct EvalReport {
  MotSummary mot;
  std::optional<OrientationSummary> orientation;
  std::map<std::string, MotSummary> per_area;
};

/// Area of a ground-truth record: its own area id when present, otherwise the
/// lexicographically first configured area containing it.
std::optional<std::string> area_of(const GroundTruthRecord& g, std::span<const Area> areas);

/// Frame-by-frame CLEAR accumulation of `tracks` against `gt`, plus the
/// orientation summary over matched pairs and the per-area breakdown.
EvalReport evaluate(std::span<const GroundTruthRecord> gt, std::span<const Track> tracks, const EvalConfig& cfg = {});

/// Localisation and orientation errors of individual camera detections against
/// ground truth, each with its camera-installation factors. Detections are
/// paired to gt per camera and frame by gated Hungarian on floor distance;
/// unplaceable detections are skipped.
std::vector<FactorSample> collect_factor_samples(std::span<const PoseDetection> detections,
                                                 std::span<const geometry::CameraModel> cameras,
                                                 std::span<const GroundTruthRecord> gt, double gate = 1.5);

}  // namespace mvtrack::metrics
