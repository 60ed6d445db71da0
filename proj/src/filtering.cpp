#include "mvtrack/filtering.hpp"

#include "mvtrack/errors.hpp"

#include <memory>
#include <stdexcept>

namespace mvtrack::filtering {
namespace {

using Eigen::Index;

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Variance given to coordinates that have never been measured.
constexpr double kUnknownVariance = 1e12;

}  // namespace

void LinearCVModel::validate() const {
  if (dim == 0) throw std::invalid_argument("model dimension must be at least 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(process_accel_sigma > 0.0) || !(measurement_sigma > 0.0))
    throw std::invalid_argument("noise sigmas must be positive");
}

Eigen::MatrixXd LinearCVModel::transition() const {
  const auto d = static_cast<Index>(dim);
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(2 * d, 2 * d);
  f.topRightCorner(d, d).diagonal().setConstant(dt);
  return f;
}

Eigen::MatrixXd LinearCVModel::process_noise() const {
  const auto d = static_cast<Index>(dim);
  const double s2 = process_accel_sigma * process_accel_sigma;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  q.topLeftCorner(d, d).diagonal().setConstant(s2 * dt * dt * dt * dt / 4.0);
  q.topRightCorner(d, d).diagonal().setConstant(s2 * dt * dt * dt / 2.0);
  q.bottomLeftCorner(d, d).diagonal().setConstant(s2 * dt * dt * dt / 2.0);
  q.bottomRightCorner(d, d).diagonal().setConstant(s2 * dt * dt);
  return q;
}

Eigen::MatrixXd LinearCVModel::observation() const {
  const auto d = static_cast<Index>(dim);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, 2 * d);
  h.leftCols(d).setIdentity();
  return h;
}

BeliefState initial_belief(const LinearCVModel& model, const Eigen::VectorXd& z, double velocity_sigma) {
  const auto d = static_cast<Index>(model.dim);
  BeliefState b;
  b.mean = Eigen::VectorXd::Zero(2 * d);
  b.mean.head(d) = z;
  b.cov = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  b.cov.topLeftCorner(d, d).diagonal().setConstant(model.measurement_sigma * model.measurement_sigma);
  b.cov.bottomRightCorner(d, d).diagonal().setConstant(velocity_sigma * velocity_sigma);
  return b;
}

BeliefState two_point_belief(const LinearCVModel& model, const Eigen::VectorXd& z_first,
                             const Eigen::VectorXd& z_second, double elapsed) {
  if (!(elapsed > 0.0)) throw std::invalid_argument("two-point initialisation needs elapsed > 0");
  const auto d = static_cast<Index>(model.dim);
  const double r = model.measurement_sigma * model.measurement_sigma;
  BeliefState b;
  b.mean.resize(2 * d);
  b.mean.head(d) = z_second;
  b.mean.tail(d) = (z_second - z_first) / elapsed;
  b.cov = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  b.cov.topLeftCorner(d, d).diagonal().setConstant(r);
  b.cov.topRightCorner(d, d).diagonal().setConstant(r / elapsed);
  b.cov.bottomLeftCorner(d, d).diagonal().setConstant(r / elapsed);
  b.cov.bottomRightCorner(d, d).diagonal().setConstant(2.0 * r / (elapsed * elapsed));
  return b;
}

BeliefState predict(const LinearCVModel& model, const BeliefState& b) {
  const Eigen::MatrixXd f = model.transition();
  BeliefState out;
  out.mean = f * b.mean;
  out.cov = f * b.cov * f.transpose() + model.process_noise();
  symmetrize(out.cov);
  return out;
}

BeliefState update(const LinearCVModel& model, const BeliefState& b, const Eigen::VectorXd& z) {
  // Mask copied into a plain bool buffer.
  auto buffer = std::make_unique<bool[]>(model.dim);
  for (std::size_t i = 0; i < model.dim; ++i) buffer[i] = true;
  return update(model, b, z, std::span<const bool>(buffer.get(), model.dim));
}

BeliefState update(const LinearCVModel& model, const BeliefState& b, const Eigen::VectorXd& z,
                   std::span<const bool> measured) {
  std::vector<Index> idx;
  for (std::size_t i = 0; i < model.dim; ++i)
    if (measured[i]) idx.push_back(static_cast<Index>(i));
  if (idx.empty()) return b;

  const auto m = static_cast<Index>(idx.size());
  const Index n = b.mean.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd zm(m);
  for (Index k = 0; k < m; ++k) {
    h(k, idx[static_cast<std::size_t>(k)]) = 1.0;
    zm(k) = z(idx[static_cast<std::size_t>(k)]);
  }
  const double r = model.measurement_sigma * model.measurement_sigma;
  const Eigen::MatrixXd pht = b.cov * h.transpose();
  Eigen::MatrixXd s = h * pht;
  s.diagonal().array() += r;
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalBreakdown("innovation covariance is not positive definite");
  const Eigen::MatrixXd k = llt.solve(pht.transpose()).transpose();

  BeliefState out;
  out.mean = b.mean + k * (zm - h * b.mean);
  // Joseph-form covariance update.
  const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(n, n) - k * h;
  out.cov = ikh * b.cov * ikh.transpose() + r * k * k.transpose();
  symmetrize(out.cov);
  return out;
}

std::vector<BeliefState> rts_smooth(const LinearCVModel& model, std::span<const BeliefState> filtered,
                                    std::span<const BeliefState> predicted) {
  if (filtered.size() != predicted.size()) throw std::invalid_argument("filtered/predicted length mismatch");
  std::vector<BeliefState> out(filtered.begin(), filtered.end());
  if (out.size() < 2) return out;
  const Eigen::MatrixXd f = model.transition();
  for (std::size_t k = out.size() - 1; k-- > 0;) {
    const BeliefState& pk1 = predicted[k + 1];
    const Eigen::LLT<Eigen::MatrixXd> llt(pk1.cov);
    if (llt.info() != Eigen::Success) throw NumericalBreakdown("predicted covariance is singular");
    // C = P_k F^T P_{k+1|k}^{-1}, computed via the symmetric solve.
    const Eigen::MatrixXd c = llt.solve(f * filtered[k].cov).transpose();
    out[k].mean = filtered[k].mean + c * (out[k + 1].mean - pk1.mean);
    out[k].cov = filtered[k].cov + c * (out[k + 1].cov - pk1.cov) * c.transpose();
    symmetrize(out[k].cov);
  }
  return out;
}

// TrackFilter

TrackFilter::TrackFilter(const LinearCVModel& model, double velocity_sigma, VelocityInit init)
    : model_(model), velocity_sigma_(velocity_sigma), init_(init), axes_(model.dim) {
  model_.validate();
  const double dt = model_.dt;
  const double s2 = model_.process_accel_sigma * model_.process_accel_sigma;
  f_ << 1.0, dt, 0.0, 1.0;
  q_ << s2 * dt * dt * dt * dt / 4.0, s2 * dt * dt * dt / 2.0, s2 * dt * dt * dt / 2.0, s2 * dt * dt;
  r_ = model_.measurement_sigma * model_.measurement_sigma;
}

void TrackFilter::start(const Eigen::VectorXd& z) {
  auto all = std::make_unique<bool[]>(model_.dim);
  for (std::size_t i = 0; i < model_.dim; ++i) all[i] = true;
  start(z, std::span<const bool>(all.get(), model_.dim));
}

void TrackFilter::update(const Eigen::VectorXd& z) {
  auto all = std::make_unique<bool[]>(model_.dim);
  for (std::size_t i = 0; i < model_.dim; ++i) all[i] = true;
  update(z, std::span<const bool>(all.get(), model_.dim));
}

void TrackFilter::start(const Eigen::VectorXd& z, std::span<const bool> measured) {
  if (steps_ != 0) throw std::logic_error("TrackFilter::start called twice");
  steps_ = 1;
  observed_.push_back(0);
  for (auto& a : axes_) {
    a.f_mean.emplace_back(Eigen::Vector2d::Zero());
    a.p_mean.emplace_back(Eigen::Vector2d::Zero());
    a.f_cov.emplace_back(Eigen::Matrix2d::Zero());
    a.p_cov.emplace_back(Eigen::Matrix2d::Zero());
  }
  update(z, measured);
}

void TrackFilter::predict() {
  if (steps_ == 0) throw std::logic_error("TrackFilter::predict before start");
  for (auto& a : axes_) {
    if (a.first < 0) {
      a.f_mean.emplace_back(Eigen::Vector2d::Zero());
      a.p_mean.emplace_back(Eigen::Vector2d::Zero());
      a.f_cov.emplace_back(Eigen::Matrix2d::Zero());
      a.p_cov.emplace_back(Eigen::Matrix2d::Zero());
      continue;
    }
    const Eigen::Vector2d pm = f_ * a.f_mean.back();
    Eigen::Matrix2d pc = f_ * a.f_cov.back() * f_.transpose() + q_;
    pc = 0.5 * (pc + pc.transpose()).eval();
    a.p_mean.push_back(pm);
    a.p_cov.push_back(pc);
    a.f_mean.push_back(pm);
    a.f_cov.push_back(pc);
  }
  ++steps_;
  observed_.push_back(0);
}

void TrackFilter::update(const Eigen::VectorXd& z, std::span<const bool> measured) {
  const long step = static_cast<long>(steps_) - 1;
  bool any = false;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (!measured[i]) continue;
    measure_axis(axes_[i], z(static_cast<Index>(i)), step);
    any = true;
  }
  if (any) observed_.back() = 1;
}

void TrackFilter::measure_axis(Axis& a, double z, long step) {
  const auto k = static_cast<std::size_t>(step);
  if (a.first < 0) {
    a.first = step;
    a.first_z = z;
    a.f_mean[k] = Eigen::Vector2d(z, 0.0);
    a.f_cov[k] << r_, 0.0, 0.0, velocity_sigma_ * velocity_sigma_;
    a.p_mean[k] = a.f_mean[k];
    a.p_cov[k] = a.f_cov[k];
    return;
  }
  if (a.second < 0 && init_ == VelocityInit::TwoPoint && step > a.first) {
    a.second = step;
    const double elapsed = static_cast<double>(step - a.first) * model_.dt;
    const double v = (z - a.first_z) / elapsed;
    const auto k0 = static_cast<std::size_t>(a.first);
    a.f_mean[k0] = Eigen::Vector2d(a.first_z, v);
    a.f_cov[k0] << r_, -r_ / elapsed, -r_ / elapsed, 2.0 * r_ / (elapsed * elapsed);
    for (std::size_t j = k0 + 1; j <= k; ++j) {
      a.p_mean[j] = f_ * a.f_mean[j - 1];
      a.p_cov[j] = f_ * a.f_cov[j - 1] * f_.transpose() + q_;
      a.f_mean[j] = a.p_mean[j];
      a.f_cov[j] = a.p_cov[j];
    }
    a.f_mean[k] = Eigen::Vector2d(z, v);
    a.f_cov[k] << r_, r_ / elapsed, r_ / elapsed, 2.0 * r_ / (elapsed * elapsed);
    return;
  }
  if (a.second < 0) a.second = step;
  const Eigen::Matrix2d& p = a.f_cov[k];
  const double s = p(0, 0) + r_;
  if (!(s > 0.0)) throw NumericalBreakdown("innovation variance is not positive");
  const Eigen::Vector2d gain = p.col(0) / s;
  a.f_mean[k] += gain * (z - a.f_mean[k](0));
  Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity();
  ikh.col(0) -= gain;
  Eigen::Matrix2d c = ikh * p * ikh.transpose() + r_ * gain * gain.transpose();
  a.f_cov[k] = 0.5 * (c + c.transpose());
}

BeliefState TrackFilter::current() const {
  const auto d = static_cast<Index>(model_.dim);
  BeliefState b;
  b.mean = Eigen::VectorXd::Zero(2 * d);
  b.cov = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  for (Index i = 0; i < d; ++i) {
    const Axis& a = axes_[static_cast<std::size_t>(i)];
    if (a.first < 0) {
      b.cov(i, i) = kUnknownVariance;
      b.cov(d + i, d + i) = kUnknownVariance;
      continue;
    }
    b.mean(i) = a.f_mean.back()(0);
    b.mean(d + i) = a.f_mean.back()(1);
    const Eigen::Matrix2d& c = a.f_cov.back();
    b.cov(i, i) = c(0, 0);
    b.cov(i, d + i) = c(0, 1);
    b.cov(d + i, i) = c(1, 0);
    b.cov(d + i, d + i) = c(1, 1);
  }
  return b;
}

std::vector<BeliefState> TrackFilter::assemble(const std::vector<std::vector<Eigen::Vector2d>>& means,
                                               const std::vector<std::vector<Eigen::Matrix2d>>& covs) const {
  const auto d = static_cast<Index>(model_.dim);
  std::vector<BeliefState> out(steps_);
  Eigen::Matrix2d f_inv;
  f_inv << 1.0, -model_.dt, 0.0, 1.0;
  for (std::size_t k = 0; k < steps_; ++k) {
    out[k].mean = Eigen::VectorXd::Zero(2 * d);
    out[k].cov = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  }
  for (Index i = 0; i < d; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Axis& a = axes_[ui];
    for (std::size_t k = 0; k < steps_; ++k) {
      Eigen::Vector2d m;
      Eigen::Matrix2d c;
      if (a.first < 0) {
        m.setZero();
        c = Eigen::Matrix2d::Identity() * kUnknownVariance;
      } else if (static_cast<long>(k) < a.first) {
        // Back-extrapolate along the first known state.
        const auto back = static_cast<int>(a.first - static_cast<long>(k));
        Eigen::Matrix2d fb = Eigen::Matrix2d::Identity();
        for (int s = 0; s < back; ++s) fb = f_inv * fb;
        const auto k0 = static_cast<std::size_t>(a.first);
        m = fb * means[ui][k0];
        c = fb * covs[ui][k0] * fb.transpose();
      } else {
        m = means[ui][k];
        c = covs[ui][k];
      }
      out[k].mean(i) = m(0);
      out[k].mean(d + i) = m(1);
      out[k].cov(i, i) = c(0, 0);
      out[k].cov(i, d + i) = c(0, 1);
      out[k].cov(d + i, i) = c(1, 0);
      out[k].cov(d + i, d + i) = c(1, 1);
    }
  }
  return out;
}

std::vector<BeliefState> TrackFilter::filtered() const {
  std::vector<std::vector<Eigen::Vector2d>> means;
  std::vector<std::vector<Eigen::Matrix2d>> covs;
  for (const auto& a : axes_) {
    means.push_back(a.f_mean);
    covs.push_back(a.f_cov);
  }
  return assemble(means, covs);
}

std::vector<BeliefState> TrackFilter::smoothed() const {
  std::vector<std::vector<Eigen::Vector2d>> means;
  std::vector<std::vector<Eigen::Matrix2d>> covs;
  for (const auto& a : axes_) {
    std::vector<Eigen::Vector2d> sm = a.f_mean;
    std::vector<Eigen::Matrix2d> sc = a.f_cov;
    if (a.first >= 0) {
      const auto first = static_cast<std::size_t>(a.first);
      for (std::size_t k = steps_ - 1; k-- > first;) {
        const Eigen::Matrix2d& pp = a.p_cov[k + 1];
        const double det = pp.determinant();
        if (!(det > 0.0)) throw NumericalBreakdown("predicted covariance is singular");
        const Eigen::Matrix2d c = a.f_cov[k] * f_.transpose() * pp.inverse();
        sm[k] = a.f_mean[k] + c * (sm[k + 1] - a.p_mean[k + 1]);
        Eigen::Matrix2d cov = a.f_cov[k] + c * (sc[k + 1] - pp) * c.transpose();
        sc[k] = 0.5 * (cov + cov.transpose());
      }
    }
    means.push_back(std::move(sm));
    covs.push_back(std::move(sc));
  }
  return assemble(means, covs);
}

}  // namespace mvtrack::filtering
