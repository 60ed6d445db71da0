#include <doctest.h>

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>

using namespace mvtrack;
using geometry::Homography;

namespace {

/// Plain Gauss-Jordan elimination of the 8 unknown system with m33 = 1,
/// written out row by row. Used as an independent reference.
Eigen::Matrix3d reference_homography(const std::array<Vec2, 4>& src, const std::array<Vec2, 4>& dst) {
  double a[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double u = src[i].x(), v = src[i].y(), x = dst[i].x(), y = dst[i].y();
    double r0[9] = {u, v, 1, 0, 0, 0, -u * x, -v * x, x};
    double r1[9] = {0, 0, 0, u, v, 1, -u * y, -v * y, y};
    for (int k = 0; k < 9; ++k) {
      a[2 * i][k] = r0[k];
      a[2 * i + 1][k] = r1[k];
    }
  }
  for (int col = 0; col < 8; ++col) {
    int piv = col;
    for (int r = col + 1; r < 8; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    for (int k = 0; k < 9; ++k) std::swap(a[col][k], a[piv][k]);
    for (int r = 0; r < 8; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int k = 0; k < 9; ++k) a[r][k] -= f * a[col][k];
    }
  }
  Eigen::Matrix3d h;
  h << a[0][8] / a[0][0], a[1][8] / a[1][1], a[2][8] / a[2][2], a[3][8] / a[3][3], a[4][8] / a[4][4],
      a[5][8] / a[5][5], a[6][8] / a[6][6], a[7][8] / a[7][7], 1.0;
  return h;
}

const std::array<Vec2, 4> kUnit = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};

geometry::CameraModel camera(double yaw) {
  geometry::CameraModel c;
  c.camera_id = "c";
  c.yaw_deg = yaw;
  c.hfov_deg = 90;
  c.vfov_deg = 60;
  c.image_size = {1280, 720};
  return c;
}

}  // namespace

TEST_CASE("fit_homography: identity correspondences give the identity") {
  const Homography h = geometry::fit_homography(kUnit, kUnit);
  CHECK(h.m.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
}

TEST_CASE("fit_homography: doubled square gives diag(2,2,1)") {
  std::array<Vec2, 4> dst;
  for (int i = 0; i < 4; ++i) dst[i] = 2.0 * kUnit[i];
  const Homography h = geometry::fit_homography(kUnit, dst);
  CHECK(h.m.isApprox(Eigen::Vector3d(2, 2, 1).asDiagonal().toDenseMatrix(), 1e-12));
  CHECK(geometry::apply_homography(h, Vec2(1, 1)).isApprox(Vec2(2, 2)));
}

TEST_CASE("fit_homography: general quadrilateral matches a direct linear solve") {
  const std::array<Vec2, 4> dst = {Vec2(0, 0), Vec2(2, 0), Vec2(3, 3), Vec2(0, 2)};
  const Homography h = geometry::fit_homography(kUnit, dst);
  CHECK(h.m(2, 2) == 1.0);
  CHECK((h.m - reference_homography(kUnit, dst)).cwiseAbs().maxCoeff() < 1e-9);
  for (int i = 0; i < 4; ++i) CHECK((geometry::apply_homography(h, kUnit[i]) - dst[i]).norm() < 1e-6);
  CHECK((geometry::apply_homography(h, Vec2(1, 1)) - Vec2(3, 3)).norm() < 1e-9);
}

TEST_CASE("fit_homography rejects collinear points") {
  const std::array<Vec2, 4> line = {Vec2(0, 0), Vec2(1, 1), Vec2(2, 2), Vec2(0, 1)};
  CHECK_THROWS_AS(geometry::fit_homography(line, kUnit), DegenerateConfiguration);
  CHECK_THROWS_AS(geometry::fit_homography(kUnit, line), DegenerateConfiguration);
}

TEST_CASE("apply_homography examples and horizon points") {
  CHECK(geometry::apply_homography(Homography{}, Vec2(3.5, 2.0)) == Vec2(3.5, 2.0));
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 0) = 1.0;
  const Homography h = Homography::from_matrix(m);
  CHECK_THROWS_AS(geometry::apply_homography(h, Vec2(-1, 5)), HorizonPoint);
  CHECK(geometry::apply_homography(h, Vec2(1, 4)).isApprox(Vec2(0.5, 2)));
}

TEST_CASE("from_matrix normalises and rejects singular matrices") {
  Eigen::Matrix3d m = 4.0 * Eigen::Matrix3d::Identity();
  CHECK(Homography::from_matrix(m).m.isApprox(Eigen::Matrix3d::Identity()));
  Eigen::Matrix3d s;
  s << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  CHECK_THROWS_AS(Homography::from_matrix(s), DegenerateConfiguration);
  Eigen::Matrix3d z = Eigen::Matrix3d::Identity();
  z(2, 2) = 0.0;
  CHECK_THROWS_AS(Homography::from_matrix(z), DegenerateConfiguration);
}

TEST_CASE("property: fit reproduces correspondences and inverse round-trips") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> px(0.0, 1000.0), w(-30.0, 30.0);
  auto spread = [](const std::array<Vec2, 4>& q, double min_area) {
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k) {
          const Vec2 a = q[j] - q[i], b = q[k] - q[i];
          if (std::abs(a.x() * b.y() - a.y() * b.x()) < min_area) return false;
        }
    return true;
  };
  int done = 0;
  while (done < 1000) {
    std::array<Vec2, 4> p, q;
    for (int i = 0; i < 4; ++i) {
      p[i] = {px(rng), px(rng)};
      q[i] = {w(rng), w(rng)};
    }
    if (!spread(p, 1000.0) || !spread(q, 2.0)) continue;
    ++done;
    const Homography h = geometry::fit_homography(p, q);
    const Homography inv = h.inverse();
    for (int i = 0; i < 4; ++i) CHECK((geometry::apply_homography(h, p[i]) - q[i]).norm() < 1e-6);
    for (int k = 0; k < 5; ++k) {
      const Vec2 x(px(rng), px(rng));
      Vec2 y;
      try {
        y = geometry::apply_homography(h, x);
      } catch (const HorizonPoint&) {
        continue;
      }
      const Vec2 back = geometry::apply_homography(inv, y);
      CHECK((back - x).norm() < 1e-6 * std::max(1.0, y.norm()));
    }
  }
}

TEST_CASE("foot_point examples") {
  Pose2D p;
  p[Joint::LeftAnkle] = {10, 20, 0.9, true};
  p[Joint::RightAnkle] = {14, 20, 0.9, true};
  CHECK(geometry::foot_point(p) == Vec2(12, 20));
  p[Joint::RightAnkle].visible = false;
  CHECK(geometry::foot_point(p) == Vec2(10, 20));
  p[Joint::LeftAnkle].visible = false;
  CHECK_THROWS_AS(geometry::foot_point(p), NoFeetVisible);
}

TEST_CASE("rotate_to_world examples") {
  const Vec2 toward_camera = heading_to_vector(180);
  CHECK(geometry::rotate_to_world(camera(0), toward_camera).isApprox(Vec2(0, -1)));
  CHECK(geometry::rotate_to_world(camera(90), toward_camera).isApprox(Vec2(-1, 0)));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> deg(0, 360);
  for (int i = 0; i < 1000; ++i) {
    const double h = deg(rng);
    const double yaw = i == 0 ? 37.0 : deg(rng);
    const Vec2 r = geometry::rotate_to_world(camera(yaw), heading_to_vector(h));
    CHECK(std::abs(r.norm() - 1.0) < 1e-12);
    // Composed rotation matrices as reference.
    const double a = -(h + yaw) * std::numbers::pi / 180.0;
    Eigen::Matrix2d rot;
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    CHECK((r - rot * Vec2(0, 1)).norm() < 1e-9);
    const double twice = vector_to_heading(geometry::rotate_to_world(camera(yaw), r));
    const double expect = wrap_degrees(h + 2 * yaw);
    CHECK(std::min(std::abs(twice - expect), 360 - std::abs(twice - expect)) < 1e-9);
  }
}

TEST_CASE("geometry_factors examples") {
  geometry::CameraModel c = camera(0);
  const auto f = geometry::geometry_factors(c, Vec2(0, 10), Vec2(0, -1), Vec2(640, 360));
  CHECK(f.distance == doctest::Approx(10));
  CHECK(f.h_norm == 0.0);
  CHECK(f.v_norm == 0.0);
  CHECK(f.facing_angle_deg == doctest::Approx(0));
  CHECK(geometry::geometry_factors(c, Vec2(0, 10), Vec2(0, 1), Vec2(1280, 360)).h_norm == doctest::Approx(1.0));
  CHECK(geometry::geometry_factors(c, Vec2(0, 10), Vec2(0, 1), Vec2(0, 360)).h_norm == doctest::Approx(1.0));
  CHECK(geometry::geometry_factors(c, Vec2(0, 10), Vec2(0, 1), Vec2(640, 720)).v_norm == doctest::Approx(1.0));
  CHECK(geometry::geometry_factors(c, Vec2(0, 10), Vec2(0, 1), Vec2(640, 360)).facing_angle_deg ==
        doctest::Approx(180));
  CHECK(geometry::geometry_factors(c, Vec2(0, 10), Vec2(1, 0), Vec2(640, 360)).facing_angle_deg ==
        doctest::Approx(90));
}

TEST_CASE("property: facing angle is invariant to translating camera and person together") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-50, 50), deg(0, 360);
  for (int i = 0; i < 1000; ++i) {
    geometry::CameraModel c = camera(deg(rng));
    c.position = {u(rng), u(rng)};
    const Vec2 person(u(rng), u(rng)), facing = heading_to_vector(deg(rng)), shift(u(rng), u(rng));
    const auto a = geometry::geometry_factors(c, person, facing, Vec2(100, 100));
    c.position += shift;
    const auto b = geometry::geometry_factors(c, person + shift, facing, Vec2(100, 100));
    CHECK(a.facing_angle_deg == doctest::Approx(b.facing_angle_deg).epsilon(1e-9));
    CHECK(a.facing_angle_deg >= 0.0);
    CHECK(a.facing_angle_deg <= 180.0);
  }
}

TEST_CASE("project_direction carries image directions onto the floor") {
  std::array<Vec2, 4> dst;
  for (int i = 0; i < 4; ++i) dst[i] = Vec2(kUnit[i].x(), -kUnit[i].y());
  const Homography flip_v = geometry::fit_homography(kUnit, dst);
  CHECK(geometry::project_direction(flip_v, Vec2(0.5, 0.5), Vec2(0, -0.1)).isApprox(Vec2(0, 1)));
}

TEST_CASE("CameraModel validation") {
  geometry::CameraModel c = camera(0);
  CHECK_NOTHROW(c.validate());
  c.hfov_deg = 180;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = camera(0);
  c.vfov_deg = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
