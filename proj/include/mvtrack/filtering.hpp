#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace mvtrack::filtering {

/// Linear constant-velocity model over `dim` positions. The state is
/// [p_1..p_d, v_1..v_d]; only positions are measured.
struct LinearCVModel {
  std::size_t dim = 1;
  double dt = 1.0;
  double process_accel_sigma = 1.0;
  double measurement_sigma = 1.0;

  /// Throws std::invalid_argument on dim == 0 or non-positive dt/sigmas.
  void validate() const;

  /// F = [[I, dt I], [0, I]].
  Eigen::MatrixXd transition() const;
  /// Discrete white-noise-acceleration Q, per axis
  /// sigma_a^2 [[dt^4/4, dt^3/2], [dt^3/2, dt^2]].
  Eigen::MatrixXd process_noise() const;
  /// H = [I, 0].
  Eigen::MatrixXd observation() const;
};

struct BeliefState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size() / 2); }
  Eigen::VectorXd position() const { return mean.head(mean.size() / 2); }
  Eigen::VectorXd velocity() const { return mean.tail(mean.size() / 2); }
};

/// Position = z, velocity = 0, position variance sigma_z^2, velocity variance
/// velocity_sigma^2, no cross terms.
BeliefState initial_belief(const LinearCVModel& model, const Eigen::VectorXd& z, double velocity_sigma);

/// Belief at the time of `z_second` from two position fixes `elapsed` seconds
/// apart, with the velocity left entirely to the data (the diffuse-prior limit).
BeliefState two_point_belief(const LinearCVModel& model, const Eigen::VectorXd& z_first,
                             const Eigen::VectorXd& z_second, double elapsed);

BeliefState predict(const LinearCVModel& model, const BeliefState& b);

/// Kalman update with every position measured. Throws NumericalBreakdown if
/// the innovation covariance cannot be factorised.
BeliefState update(const LinearCVModel& model, const BeliefState& b, const Eigen::VectorXd& z);

/// Update where only positions with `measured[i]` set are observed; entries of
/// `z` at unmeasured positions are ignored.
BeliefState update(const LinearCVModel& model, const BeliefState& b, const Eigen::VectorXd& z,
                   std::span<const bool> measured);

/// Rauch-Tung-Striebel backward pass. `predicted[k]` is the one-step
/// prediction from `filtered[k-1]`; `predicted[0]` is not read.
/// Throws NumericalBreakdown on a singular predicted covariance.
std::vector<BeliefState> rts_smooth(const LinearCVModel& model, std::span<const BeliefState> filtered,
                                    std::span<const BeliefState> predicted);

enum class VelocityInit {
  /// First fix starts at zero velocity with the configured prior; the second
  /// fix re-initialises from the two positions (exact on noiseless CV data).
  TwoPoint,
  /// Plain Kalman recursion from the first fix's prior.
  Prior,
};

/// Online filter for one track over consecutive steps, with the history kept
/// for smoothing. The CV model is separable, so each coordinate runs as an
/// independent 2-state filter; coordinates may enter the track late (a
/// keypoint first seen after birth).
class TrackFilter {
 public:
  TrackFilter(const LinearCVModel& model, double velocity_sigma, VelocityInit init = VelocityInit::TwoPoint);

  /// Opens step 0 with a measurement.
  void start(const Eigen::VectorXd& z, std::span<const bool> measured);
  void start(const Eigen::VectorXd& z);

  /// Opens the next step from the prediction. It stays a coasted step unless
  /// update() follows.
  void predict();
  void update(const Eigen::VectorXd& z, std::span<const bool> measured);
  void update(const Eigen::VectorXd& z);

  std::size_t steps() const { return steps_; }
  const LinearCVModel& model() const { return model_; }
  /// True once the coordinate has received a measurement.
  bool known(std::size_t coord) const { return axes_[coord].first >= 0; }
  bool observed(std::size_t step) const { return observed_[step] != 0; }

  /// Latest filtered (or predicted, when coasting) belief.
  BeliefState current() const;
  std::vector<BeliefState> filtered() const;
  /// RTS-smoothed history. Coordinates unknown at a step are extrapolated
  /// backwards from their first smoothed state.
  std::vector<BeliefState> smoothed() const;

 private:
  struct Axis {
    std::vector<Eigen::Vector2d> f_mean, p_mean;
    std::vector<Eigen::Matrix2d> f_cov, p_cov;
    long first = -1;
    long second = -1;
    double first_z = 0.0;
  };

  void measure_axis(Axis& a, double z, long step);
  std::vector<BeliefState> assemble(const std::vector<std::vector<Eigen::Vector2d>>& means,
                                    const std::vector<std::vector<Eigen::Matrix2d>>& covs) const;

  LinearCVModel model_;
  double velocity_sigma_;
  VelocityInit init_;
  Eigen::Matrix2d f_;
  Eigen::Matrix2d q_;
  double r_;
  std::vector<Axis> axes_;
  std::vector<char> observed_;
  std::size_t steps_ = 0;
};

}  // namespace mvtrack::filtering
