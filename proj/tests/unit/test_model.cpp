#include <doctest.h>

#include "oracles.hpp"

#include "mvtrack/model.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace mvtrack;

TEST_CASE("validate_pose accepts a well-formed pose") {
  Pose2D p;
  for (auto& k : p.keypoints) k.confidence = 0.5;
  CHECK(validate_pose(p));
}

TEST_CASE("validate_pose rejects a short keypoint list") {
  std::vector<Keypoint> kps(16, Keypoint{0, 0, 0.5, true});
  CHECK_FALSE(validate_pose(kps));
  kps.push_back({0, 0, 0.5, true});
  CHECK(validate_pose(kps));
  kps.push_back({0, 0, 0.5, true});
  CHECK_FALSE(validate_pose(kps));
}

TEST_CASE("validate_pose rejects confidences outside [0,1]") {
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    Pose2D p;
    for (auto& k : p.keypoints) k.confidence = 0.5;
    p[i].confidence = 1.2;
    CHECK_FALSE(validate_pose(p));
    p[i].confidence = -0.1;
    CHECK_FALSE(validate_pose(p));
  }
}

TEST_CASE("joint table is in COCO order and mirroring is an involution") {
  CHECK(kJointNames[index(Joint::Nose)] == "nose");
  CHECK(kJointNames[index(Joint::LeftShoulder)] == "left_shoulder");
  CHECK(kJointNames[index(Joint::RightAnkle)] == "right_ankle");
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    CHECK(kMirrorJoint[kMirrorJoint[i]] == i);
    if (i > 0) {
      CHECK(kMirrorJoint[i] != i);
      const auto name = std::string(kJointNames[i]);
      const auto other = std::string(kJointNames[kMirrorJoint[i]]);
      CHECK(name.substr(name.find('_')) == other.substr(other.find('_')));
    }
  }
  const Pose2D p = oracle::standing_pose(Vec2(100, 400));
  const Pose2D back = p.mirrored().mirrored();
  for (std::size_t i = 0; i < kNumKeypoints; ++i) CHECK(back[i].u == p[i].u);
  CHECK(p.mirrored()[Joint::LeftAnkle].u == p[Joint::RightAnkle].u);
}

TEST_CASE("tight_square contains every visible keypoint") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> px(-500.0, 1500.0);
  std::bernoulli_distribution vis(0.7);
  std::uniform_real_distribution<double> grow(0.0, 0.5);
  for (int trial = 0; trial < 2000; ++trial) {
    Pose2D p;
    for (auto& k : p.keypoints) k = {px(rng), px(rng), 0.8, vis(rng)};
    const BoundingBox b = tight_square(p, grow(rng));
    for (const auto& k : p.keypoints)
      if (k.visible) CHECK(b.contains(k.pixel(), 1e-6));
  }
}

TEST_CASE("tight_square is a square grown about its centre") {
  Pose2D p;
  p[Joint::Nose] = {10, 10, 1, true};
  p[Joint::LeftAnkle] = {20, 50, 1, true};
  const BoundingBox tight = tight_square(p);
  CHECK(tight.side == doctest::Approx(40));
  CHECK(tight.u_min == doctest::Approx(-5));
  CHECK(tight.v_min == doctest::Approx(10));
  const BoundingBox grown = tight_square(p, 0.1);
  CHECK(grown.side == doctest::Approx(44));
  CHECK(grown.u_min + grown.side / 2 == doctest::Approx(15));
  CHECK(tight_square(Pose2D{}).side == 0.0);
}

TEST_CASE("TrackState orientation is unit after every construction path") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 o(u(rng), u(rng));
    TrackState s(0, Vec2::Zero(), Vec2::Zero(), o, Vec2::Zero(), Eigen::Matrix4d::Identity(), true);
    CHECK(std::abs(s.orientation().norm() - 1.0) <= 1e-9);
    s.set_orientation(Vec2(u(rng) * 1e-6, u(rng)));
    CHECK(std::abs(s.orientation().norm() - 1.0) <= 1e-9);
  }
  TrackState d;
  CHECK(d.orientation() == Vec2(0, 1));
  d.set_orientation(Vec2(3, 4));
  d.set_orientation(Vec2::Zero());
  CHECK(d.orientation().isApprox(Vec2(0.6, 0.8)));
}

TEST_CASE("headings are clockwise from north") {
  CHECK(heading_to_vector(0).isApprox(Vec2(0, 1)));
  CHECK(heading_to_vector(90).isApprox(Vec2(1, 0)));
  CHECK(heading_to_vector(180).isApprox(Vec2(0, -1)));
  CHECK(heading_to_vector(270).isApprox(Vec2(-1, 0)));
  CHECK(vector_to_heading(Vec2(1, 0)) == doctest::Approx(90));
  CHECK(vector_to_heading(Vec2(-1, 0)) == doctest::Approx(270));
  CHECK(wrap_degrees(-10) == doctest::Approx(350));
  CHECK(wrap_degrees(720) == 0.0);
  CHECK(wrap_degrees(-1e-17) < 360.0);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> deg(0.0, 360.0);
  for (int i = 0; i < 1000; ++i) {
    const double h = deg(rng);
    const double back = vector_to_heading(heading_to_vector(h));
    CHECK(std::min(std::abs(back - h), 360.0 - std::abs(back - h)) < 1e-9);
  }
}
