#pragma once

#include "mvtrack/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>

namespace mvtrack::geometry {

/// Planar projective map, stored with m(2,2) == 1.
struct Homography {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  /// Rescales so that m(2,2) == 1 and checks invertibility.
  /// Throws DegenerateConfiguration when m(2,2) vanishes or the matrix is
  /// singular after row and column scaling.
  static Homography from_matrix(const Eigen::Matrix3d& raw);

  Homography inverse() const;
};

/// Exact homography through four correspondences (direct 8-unknown solve).
/// Throws DegenerateConfiguration when three points of either set are
/// collinear or the linear system is singular.
Homography fit_homography(std::span<const Vec2, 4> pixel_points, std::span<const Vec2, 4> world_points);

/// Throws HorizonPoint when the point maps to infinity.
Vec2 apply_homography(const Homography& h, const Vec2& p);

/// Midpoint of the visible ankles, or the single visible ankle.
/// Throws NoFeetVisible when neither ankle is visible.
Vec2 foot_point(const Pose2D& pose);

struct ImageSize {
  int width = 0;
  int height = 0;
};

struct CameraModel {
  std::string camera_id;
  Vec2 position = Vec2::Zero();
  double mount_height = 0.0;
  /// Viewpoint heading in the site frame, degrees clockwise from north.
  double yaw_deg = 0.0;
  double hfov_deg = 60.0;
  double vfov_deg = 45.0;
  /// Pixel -> site floor.
  Homography homography;
  ImageSize image_size;
  double max_range = 0.0;

  /// Throws ValidationError if the field-of-view or image size is out of range.
  void validate() const;
};

/// Rotates a camera-frame facing vector (heading 0 = along the optical axis)
/// into the site frame. Heading is preserved up to the addition of yaw.
Vec2 rotate_to_world(const CameraModel& cam, const Vec2& v_cam);

/// Transports an image-plane direction anchored at `origin_px` onto the floor
/// through `h` and returns it as a unit site-frame vector. Used to carry the
/// 2D heuristic orientation into site coordinates.
Vec2 project_direction(const Homography& h, const Vec2& origin_px, const Vec2& dir_px);

struct GeometryFactors {
  double distance = 0.0;
  double facing_angle_deg = 0.0;
  double h_norm = 0.0;
  double v_norm = 0.0;
};

/// Camera-installation factors for one observation of a person.
/// h_norm/v_norm are the absolute angular offsets of `pixel_foot` from the
/// image centre divided by the half field of view (centre 0, frame edge 1).
GeometryFactors geometry_factors(const CameraModel& cam, const Vec2& world_pos, const Vec2& facing,
                                 const Vec2& pixel_foot);

}  // namespace mvtrack::geometry
