#include <doctest.h>

#include "mvtrack/errors.hpp"
#include "mvtrack/filtering.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace mvtrack::filtering;

namespace {

BeliefState belief(std::initializer_list<double> mean, const Eigen::MatrixXd& cov) {
  BeliefState b;
  b.mean = Eigen::VectorXd(static_cast<Eigen::Index>(mean.size()));
  Eigen::Index i = 0;
  for (double v : mean) b.mean(i++) = v;
  b.cov = cov;
  return b;
}

bool symmetric_psd(const Eigen::MatrixXd& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

/// Filtered and one-step-predicted beliefs over a full sequence of fixes.
struct Pass {
  std::vector<BeliefState> filtered, predicted;
};

Pass filter_pass(const LinearCVModel& m, const std::vector<Eigen::VectorXd>& zs, const BeliefState& init) {
  Pass p;
  BeliefState b = update(m, init, zs[0]);
  p.predicted.push_back(init);
  p.filtered.push_back(b);
  for (std::size_t k = 1; k < zs.size(); ++k) {
    const BeliefState pr = predict(m, b);
    b = update(m, pr, zs[k]);
    p.predicted.push_back(pr);
    p.filtered.push_back(b);
  }
  return p;
}

}  // namespace

TEST_CASE("predict examples") {
  const LinearCVModel m{1, 1.0, 1.0, 1.0};
  const auto b = predict(m, belief({0, 1}, Eigen::Matrix2d::Identity()));
  CHECK(b.mean(0) == 1.0);
  CHECK(b.mean(1) == 1.0);
  const auto still = predict(m, belief({3, 0}, Eigen::Matrix2d::Identity()));
  CHECK(still.mean(0) == 3.0);
  CHECK(still.cov.trace() > 2.0);
  const LinearCVModel m2{2, 0.5, 0.1, 1.0};
  const auto b2 = predict(m2, belief({0, 0, 2, -2}, Eigen::Matrix4d::Zero()));
  CHECK(b2.position().isApprox(Eigen::Vector2d(1, -1)));
  CHECK(b2.cov.trace() > 0.0);
}

TEST_CASE("model matrices") {
  const LinearCVModel m{2, 2.0, 3.0, 1.0};
  const Eigen::MatrixXd f = m.transition();
  CHECK(f(0, 2) == 2.0);
  CHECK(f(1, 3) == 2.0);
  CHECK(f(0, 3) == 0.0);
  const Eigen::MatrixXd q = m.process_noise();
  CHECK(q(0, 0) == doctest::Approx(9.0 * 16.0 / 4.0));
  CHECK(q(0, 2) == doctest::Approx(9.0 * 8.0 / 2.0));
  CHECK(q(2, 2) == doctest::Approx(9.0 * 4.0));
  CHECK(q(0, 1) == 0.0);
  const Eigen::MatrixXd h = m.observation();
  CHECK(h.rows() == 2);
  CHECK(h.cols() == 4);
  CHECK(h(1, 1) == 1.0);
  CHECK_THROWS_AS((LinearCVModel{0, 1, 1, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((LinearCVModel{1, 0, 1, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((LinearCVModel{1, 1, 1, -1}).validate(), std::invalid_argument);
}

TEST_CASE("update: hand-computed gain of one half") {
  const LinearCVModel m{1, 1.0, 1.0, 1.0};
  const auto b = update(m, belief({0, 0}, Eigen::Matrix2d::Identity()), Eigen::VectorXd::Constant(1, 2.0));
  // K = P H^T (H P H^T + R)^-1 = 1 / (1 + 1).
  CHECK(b.mean(0) == doctest::Approx(1.0));
  CHECK(b.mean(1) == doctest::Approx(0.0));
  CHECK(b.cov(0, 0) == doctest::Approx(0.5));
  CHECK(b.cov(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("update: exact and uninformative measurement limits") {
  const auto prior = belief({1, 2}, Eigen::Matrix2d::Identity() * 4.0);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 7.0);
  CHECK(update(LinearCVModel{1, 1.0, 1.0, 1e-6}, prior, z).mean(0) == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(update(LinearCVModel{1, 1.0, 1.0, 1e6}, prior, z).mean(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("update: posterior position lies between prior and measurement") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10, 10);
  const LinearCVModel m{3, 1.0, 0.7, 0.9};
  for (int i = 0; i < 500; ++i) {
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return u(rng); });
    // Block-diagonal, one 2x2 block per axis.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(6, 6);
    for (int ax = 0; ax < 3; ++ax) {
      Eigen::Matrix2d s;
      s << a(ax, 0), a(ax, 1), a(ax, 2), a(ax, 3);
      const Eigen::Matrix2d p = s * s.transpose() + 0.1 * Eigen::Matrix2d::Identity();
      cov(ax, ax) = p(0, 0);
      cov(ax, ax + 3) = cov(ax + 3, ax) = p(0, 1);
      cov(ax + 3, ax + 3) = p(1, 1);
    }
    BeliefState b{Eigen::VectorXd::NullaryExpr(6, [&] { return u(rng); }), cov};
    const Eigen::VectorXd z = Eigen::VectorXd::NullaryExpr(3, [&] { return u(rng); });
    const auto post = update(m, b, z);
    for (int k = 0; k < 3; ++k) {
      CHECK(post.mean(k) >= std::min(b.mean(k), z(k)) - 1e-9);
      CHECK(post.mean(k) <= std::max(b.mean(k), z(k)) + 1e-9);
    }
    CHECK(post.cov.trace() <= b.cov.trace() + 1e-9);
  }
}

TEST_CASE("masked update leaves unmeasured coordinates alone") {
  const LinearCVModel m{2, 1.0, 1.0, 1.0};
  const auto prior = belief({0, 0, 1, 1}, Eigen::Matrix4d::Identity());
  const bool measured[] = {true, false};
  const auto post = update(m, prior, Eigen::Vector2d(2, 100), measured);
  CHECK(post.mean(0) == doctest::Approx(1.0));
  CHECK(post.mean(1) == 0.0);
  CHECK(post.mean(3) == 1.0);
  CHECK(post.cov(1, 1) == 1.0);
  const bool none[] = {false, false};
  CHECK(update(m, prior, Eigen::Vector2d(2, 100), none).mean.isApprox(prior.mean));
}

TEST_CASE("property: covariance stays symmetric PSD over 10^5 random operations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5, 5), s(0.05, 3.0);
  std::bernoulli_distribution coin(0.5);
  LinearCVModel m{2, 1.0, 0.5, 0.5};
  BeliefState b = initial_belief(m, Eigen::Vector2d(0, 0), 1.42);
  for (int i = 0; i < 100000; ++i) {
    if (i % 50 == 0) {
      m = {2, s(rng), s(rng), s(rng)};
      b = initial_belief(m, Eigen::Vector2d(u(rng), u(rng)), s(rng));
    }
    if (coin(rng)) {
      b = predict(m, b);
    } else if (coin(rng)) {
      b = update(m, b, Eigen::Vector2d(u(rng), u(rng)));
    } else {
      const bool mask[] = {coin(rng), coin(rng)};
      b = update(m, b, Eigen::Vector2d(u(rng), u(rng)), mask);
    }
    REQUIRE(symmetric_psd(b.cov));
  }
}

TEST_CASE("initial and two-point beliefs") {
  const LinearCVModel m{2, 1.0, 0.5, 0.5};
  const auto b = initial_belief(m, Eigen::Vector2d(3, 4), 1.42);
  CHECK(b.position().isApprox(Eigen::Vector2d(3, 4)));
  CHECK(b.velocity().isZero());
  CHECK(b.cov(0, 0) == doctest::Approx(0.25));
  CHECK(b.cov(2, 2) == doctest::Approx(1.42 * 1.42));
  CHECK(b.cov(0, 2) == 0.0);
  const auto t = two_point_belief(m, Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 1), 2.0);
  CHECK(t.position().isApprox(Eigen::Vector2d(2, 1)));
  CHECK(t.velocity().isApprox(Eigen::Vector2d(1, 0.5)));
  CHECK(symmetric_psd(t.cov));
}

TEST_CASE("rts_smooth: single state is returned unchanged") {
  const LinearCVModel m{1, 1.0, 1.0, 1.0};
  const std::vector<BeliefState> f = {belief({1, 2}, Eigen::Matrix2d::Identity())};
  const auto s = rts_smooth(m, f, f);
  REQUIRE(s.size() == 1);
  CHECK(s[0].mean == f[0].mean);
  CHECK(s[0].cov == f[0].cov);
}

TEST_CASE("rts_smooth: singular predicted covariance is a numerical breakdown") {
  const LinearCVModel m{1, 1.0, 1.0, 1.0};
  const std::vector<BeliefState> f(2, belief({0, 0}, Eigen::Matrix2d::Zero()));
  CHECK_THROWS_AS(rts_smooth(m, f, f), mvtrack::NumericalBreakdown);
}

TEST_CASE("rts_smooth: noiseless constant velocity is reproduced exactly") {
  const LinearCVModel m{2, 1.0, 0.5, 0.5};
  std::vector<Eigen::VectorXd> zs;
  for (int k = 0; k < 30; ++k) zs.push_back(Eigen::Vector2d(1.0 + 0.8 * k, -2.0 + 0.3 * k));
  const auto pass = filter_pass(m, zs, two_point_belief(m, zs[0] - Eigen::Vector2d(0.8, 0.3), zs[0], 1.0));
  const auto s = rts_smooth(m, pass.filtered, pass.predicted);
  for (std::size_t k = 0; k < zs.size(); ++k) {
    CHECK((pass.filtered[k].position() - zs[k]).norm() < 1e-9);
    CHECK((s[k].position() - zs[k]).norm() < 1e-9);
  }
}

TEST_CASE("rts_smooth: last state unchanged and traces shrink") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 0.5);
  const LinearCVModel m{2, 1.0, 0.5, 0.5};
  std::vector<Eigen::VectorXd> zs;
  for (int k = 0; k < 50; ++k) zs.push_back(Eigen::Vector2d(0.9 * k + n(rng), 0.2 * k + n(rng)));
  const auto pass = filter_pass(m, zs, initial_belief(m, zs[0], 1.42));
  const auto s = rts_smooth(m, pass.filtered, pass.predicted);
  CHECK(s.back().mean == pass.filtered.back().mean);
  for (std::size_t k = 0; k < zs.size(); ++k) {
    CHECK(s[k].cov.trace() <= pass.filtered[k].cov.trace() + 1e-9);
    CHECK(symmetric_psd(s[k].cov));
  }
}

TEST_CASE("rts_smooth: smoothed RMSE beats filtered RMSE in at least 95 of 100 seeds") {
  const LinearCVModel m{1, 1.0, 0.5, 0.5};
  int better = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(500 + seed);
    std::normal_distribution<double> n(0.0, 0.5);
    std::vector<Eigen::VectorXd> zs;
    std::vector<double> truth;
    for (int k = 0; k < 50; ++k) {
      truth.push_back(1.1 * k);
      zs.push_back(Eigen::VectorXd::Constant(1, truth.back() + n(rng)));
    }
    const auto pass = filter_pass(m, zs, initial_belief(m, zs[0], 1.42));
    const auto s = rts_smooth(m, pass.filtered, pass.predicted);
    double ef = 0.0, es = 0.0;
    for (int k = 0; k < 50; ++k) {
      ef += std::pow(pass.filtered[static_cast<std::size_t>(k)].mean(0) - truth[static_cast<std::size_t>(k)], 2);
      es += std::pow(s[static_cast<std::size_t>(k)].mean(0) - truth[static_cast<std::size_t>(k)], 2);
    }
    if (es < ef) ++better;
  }
  CHECK(better >= 95);
}

TEST_CASE("rts_smooth is idempotent on noiseless sequences") {
  const LinearCVModel m{2, 1.0, 0.5, 0.5};
  std::vector<Eigen::VectorXd> zs;
  for (int k = 0; k < 20; ++k) zs.push_back(Eigen::Vector2d(0.5 * k, 3.0 - 0.4 * k));
  const auto pass = filter_pass(m, zs, two_point_belief(m, zs[0] - Eigen::Vector2d(0.5, -0.4), zs[0], 1.0));
  const auto once = rts_smooth(m, pass.filtered, pass.predicted);
  std::vector<BeliefState> repredicted = {once[0]};
  for (std::size_t k = 1; k < once.size(); ++k) repredicted.push_back(predict(m, once[k - 1]));
  const auto twice = rts_smooth(m, once, repredicted);
  for (std::size_t k = 0; k < once.size(); ++k) CHECK((twice[k].mean - once[k].mean).norm() < 1e-9);
}

TEST_CASE("TrackFilter: exact on noiseless data after two fixes") {
  const LinearCVModel m{2, 1.0, 0.5, 0.5};
  TrackFilter f(m, 1.42);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector2d z(2.0 + 1.3 * k, 5.0 - 0.2 * k);
    if (k == 0) f.start(z);
    else {
      f.predict();
      f.update(z);
    }
    if (k >= 1) {
      CHECK((f.current().position() - z).norm() < 1e-9);
      CHECK((f.current().velocity() - Eigen::Vector2d(1.3, -0.2)).norm() < 1e-9);
    }
  }
  CHECK(f.steps() == 20);
}

TEST_CASE("TrackFilter: coasting, late coordinates and smoothing") {
  const LinearCVModel m{2, 1.0, 0.5, 0.5};
  TrackFilter f(m, 1.42);
  const bool first_only[] = {true, false};
  f.start(Eigen::Vector2d(0, 0), first_only);
  CHECK(f.known(0));
  CHECK_FALSE(f.known(1));
  f.predict();
  f.update(Eigen::Vector2d(1, 10));
  CHECK(f.known(1));
  f.predict();
  CHECK_FALSE(f.observed(2));
  f.predict();
  f.update(Eigen::Vector2d(3, 12));
  CHECK(f.observed(3));
  CHECK(f.steps() == 4);
  const auto s = f.smoothed();
  REQUIRE(s.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(s[static_cast<std::size_t>(k)].position()(0) == doctest::Approx(k).epsilon(1e-9));
  CHECK(s[2].position()(1) == doctest::Approx(11.0).epsilon(1e-9));
  CHECK(s[0].position()(1) == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(f.filtered().size() == 4);
}

TEST_CASE("TrackFilter: prior initialisation runs the plain recursion") {
  const LinearCVModel m{1, 1.0, 1.0, 1.0};
  TrackFilter f(m, 1.0, VelocityInit::Prior);
  f.start(Eigen::VectorXd::Constant(1, 0.0));
  f.predict();
  f.update(Eigen::VectorXd::Constant(1, 2.0));
  const BeliefState ref =
      update(m, predict(m, initial_belief(m, Eigen::VectorXd::Constant(1, 0.0), 1.0)), Eigen::VectorXd::Constant(1, 2.0));
  CHECK(f.current().mean.isApprox(ref.mean));
  CHECK(f.current().cov.isApprox(ref.cov));
}
