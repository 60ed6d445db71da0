#include "mvtrack/simulator.hpp"

#include "mvtrack/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mvtrack::sim {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kTimeTol = 1e-9;

struct Rig {
  Eigen::Matrix3d k;
  Eigen::Matrix3d r;  // world -> camera, rows: right, down, forward
  Eigen::Vector3d center;
};

Rig make_rig(const CameraSpec& cam) {
  const double yaw = cam.yaw_deg * kDegToRad;
  const double pitch = cam.pitch_deg * kDegToRad;
  const Eigen::Vector3d fwd(std::sin(yaw) * std::cos(pitch), std::cos(yaw) * std::cos(pitch), -std::sin(pitch));
  const Eigen::Vector3d right(std::cos(yaw), -std::sin(yaw), 0.0);
  const Eigen::Vector3d down = fwd.cross(right);
  Rig rig;
  const double f = cam.focal_px();
  rig.k << f, 0.0, 0.5 * cam.image_size.width, 0.0, f, 0.5 * cam.image_size.height, 0.0, 0.0, 1.0;
  rig.r.row(0) = right.transpose();
  rig.r.row(1) = down.transpose();
  rig.r.row(2) = fwd.transpose();
  rig.center = Eigen::Vector3d(cam.position.x(), cam.position.y(), cam.mount_height);
  return rig;
}

bool in_image(const CameraSpec& cam, const Vec2& px) {
  return px.x() >= 0.0 && px.x() <= cam.image_size.width && px.y() >= 0.0 && px.y() <= cam.image_size.height;
}

struct Segment {
  double start = 0.0;
  double end = 0.0;
  Vec2 from = Vec2::Zero();
  Vec2 to = Vec2::Zero();
  // Empty for a move.
  std::vector<double> hold;
};

Pose2D render_skeleton(const Vec2& foot_px, double scale, double orientation_cam_deg) {
  const double a = orientation_cam_deg * kDegToRad;
  Pose2D pose;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const SkeletonPoint& s = kSkeleton[i];
    Keypoint& kp = pose[i];
    kp.u = foot_px.x() + scale * (-s.lateral * std::cos(a) + s.forward * std::sin(a));
    kp.v = foot_px.y() - scale * s.height;
    kp.confidence = 1.0;
    kp.visible = true;
  }
  return pose;
}

}  // namespace

const std::array<SkeletonPoint, kNumKeypoints> kSkeleton = {{
    {0.00, 0.10, 1.55},   // nose
    {0.03, 0.07, 1.60},   // left eye
    {-0.03, 0.07, 1.60},  // right eye
    {0.07, 0.00, 1.58},   // left ear
    {-0.07, 0.00, 1.58},  // right ear
    {0.20, 0.00, 1.40},   // left shoulder
    {-0.20, 0.00, 1.40},  // right shoulder
    {0.25, 0.00, 1.10},   // left elbow
    {-0.25, 0.00, 1.10},  // right elbow
    {0.25, 0.00, 0.85},   // left wrist
    {-0.25, 0.00, 0.85},  // right wrist
    {0.12, 0.00, 0.95},   // left hip
    {-0.12, 0.00, 0.95},  // right hip
    {0.10, 0.00, 0.50},   // left knee
    {-0.10, 0.00, 0.50},  // right knee
    {0.10, 0.00, 0.00},   // left ankle
    {-0.10, 0.00, 0.00},  // right ankle
}};

double CameraSpec::focal_px() const { return 0.5 * image_size.width / std::tan(0.5 * hfov_deg * kDegToRad); }

double CameraSpec::vfov_deg() const {
  return 2.0 * std::atan(0.5 * image_size.height / focal_px()) / kDegToRad;
}

void CameraSpec::validate() const {
  if (image_size.width <= 0 || image_size.height <= 0)
    throw ValidationError("camera " + camera_id + ": image size must be positive");
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) throw ValidationError("camera " + camera_id + ": hfov outside (0,180)");
  if (!(mount_height > 0.0)) throw ValidationError("camera " + camera_id + ": mount height must be positive");
  if (!(pitch_deg > 0.0 && pitch_deg <= 90.0))
    throw ValidationError("camera " + camera_id + ": pitch must lie in (0,90] to see the floor");
  if (!(max_range > 0.0)) throw ValidationError("camera " + camera_id + ": max_range must be positive");
}

void NoiseSpec::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string("noise ") + name + " must lie in [0,1]");
  };
  prob(fn_base_prob, "fn_base_prob");
  prob(flip_prob, "flip_prob");
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0)) throw ValidationError(std::string("noise ") + name + " must be non-negative");
  };
  nonneg(keypoint_sigma_px, "keypoint_sigma_px");
  nonneg(fn_distance_slope, "fn_distance_slope");
  nonneg(orientation_sigma_deg, "orientation_sigma_deg");
  nonneg(loc_error_per_meter, "loc_error_per_meter");
  nonneg(loc_error_sigma, "loc_error_sigma");
  if (ghost_count < 0) throw ValidationError("noise ghost_count must be non-negative");
}

bool NoiseSpec::has_floor_offsets() const {
  return loc_error_per_meter > 0.0 || loc_error_sigma > 0.0 || !localization_bias.empty();
}

void Scenario::validate() const {
  if (!(site.width > 0.0 && site.height > 0.0)) throw ValidationError("site dimensions must be positive");
  if (duration < 0) throw ValidationError("duration must be non-negative");
  for (const auto& c : cameras) c.validate();
  noise.validate();
  for (const auto& p : persons) {
    if (!(p.speed > 0.0 && p.speed <= kMaxWalkingSpeed))
      throw ValidationError("person " + p.person_id + ": speed must lie in (0, 1.42] m/s");
    if (p.waypoints.empty()) throw ValidationError("person " + p.person_id + " has no waypoints");
    if (p.start_t < 0) throw ValidationError("person " + p.person_id + ": start_t must be non-negative");
    for (const auto& w : p.waypoints)
      if (!site.contains(w.point))
        throw WaypointOutsideSite("person " + p.person_id + ": waypoint (" + std::to_string(w.point.x()) + ", " +
                                  std::to_string(w.point.y()) + ") lies outside the site");
  }
}

std::vector<GroundTruthRecord> synthesize_trajectories(const Scenario& s) {
  s.validate();
  std::vector<GroundTruthRecord> out;
  for (const auto& p : s.persons) {
    std::vector<Segment> segs;
    double clock = 0.0;
    for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
      const PathNode& node = p.waypoints[i];
      if (i > 0) {
        const Vec2 from = p.waypoints[i - 1].point;
        const double len = (node.point - from).norm();
        if (len > 0.0) {
          segs.push_back({clock, clock + len / p.speed, from, node.point, {}});
          clock += len / p.speed;
        }
      }
      if (!node.hold_deg.empty()) {
        const double d = static_cast<double>(node.hold_deg.size());
        segs.push_back({clock, clock + d, node.point, node.point, node.hold_deg});
        clock += d;
      }
    }
    const double total = clock;
    const bool ends_on_move = !segs.empty() && segs.back().hold.empty();

    auto emit = [&](double tau, const Vec2& loc, double heading) {
      const Frame t = p.start_t + static_cast<Frame>(std::llround(tau));
      if (s.duration > 0 && t >= s.duration) return;
      out.push_back({t, p.person_id, loc, wrap_degrees(heading), p.area_id});
    };

    if (segs.empty()) {
      emit(0.0, p.waypoints.front().point, 0.0);
      continue;
    }
    for (long k = 0;; ++k) {
      const double tau = static_cast<double>(k);
      if (tau > total + kTimeTol) break;
      if (tau >= total - kTimeTol && !ends_on_move) break;
      const Segment* seg = &segs.back();
      for (const auto& sg : segs)
        if (tau < sg.end - kTimeTol) {
          seg = &sg;
          break;
        }
      if (seg->hold.empty()) {
        const double frac = std::clamp((tau - seg->start) / (seg->end - seg->start), 0.0, 1.0);
        emit(tau, seg->from + frac * (seg->to - seg->from), vector_to_heading(seg->to - seg->from));
      } else {
        const auto idx = static_cast<std::size_t>(std::clamp(std::floor(tau - seg->start + kTimeTol), 0.0,
                                                             static_cast<double>(seg->hold.size() - 1)));
        emit(tau, seg->from, seg->hold[idx]);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GroundTruthRecord& a, const GroundTruthRecord& b) {
    return a.t != b.t ? a.t < b.t : a.person_id < b.person_id;
  });
  return out;
}

Eigen::Matrix3d floor_to_pixel(const CameraSpec& cam) {
  const Rig rig = make_rig(cam);
  Eigen::Matrix3d m;
  m.col(0) = rig.r.col(0);
  m.col(1) = rig.r.col(1);
  m.col(2) = -rig.r * rig.center;
  return rig.k * m;
}

geometry::CameraModel to_camera_model(const CameraSpec& cam) {
  cam.validate();
  geometry::CameraModel m;
  m.camera_id = cam.camera_id;
  m.position = cam.position;
  m.mount_height = cam.mount_height;
  m.yaw_deg = cam.yaw_deg;
  m.hfov_deg = cam.hfov_deg;
  m.vfov_deg = cam.vfov_deg();
  m.homography = geometry::Homography::from_matrix(floor_to_pixel(cam).inverse());
  m.image_size = cam.image_size;
  m.max_range = cam.max_range;
  return m;
}

std::optional<PoseDetection> project_to_camera(const CameraSpec& cam, const GroundTruthRecord& person,
                                               std::optional<Vec2> anchor) {
  const Rig rig = make_rig(cam);
  auto to_cam = [&](const Vec2& p) { return Eigen::Vector3d(rig.r * (Eigen::Vector3d(p.x(), p.y(), 0.0) - rig.center)); };
  auto to_px = [&](const Eigen::Vector3d& pc) { return Vec2(Vec2(rig.k(0, 0) * pc.x() / pc.z() + rig.k(0, 2),
                                                                rig.k(1, 1) * pc.y() / pc.z() + rig.k(1, 2))); };

  if ((person.location - cam.position).norm() > cam.max_range) return std::nullopt;
  const Eigen::Vector3d true_cam = to_cam(person.location);
  if (true_cam.z() <= 1e-9) return std::nullopt;

  const double orientation_cam = wrap_degrees(person.orientation_deg - cam.yaw_deg);
  const Vec2 true_foot = to_px(true_cam);
  const Pose2D true_pose = render_skeleton(true_foot, rig.k(0, 0) / true_cam.z(), orientation_cam);
  if (!in_image(cam, true_pose[Joint::LeftAnkle].pixel()) || !in_image(cam, true_pose[Joint::RightAnkle].pixel()))
    return std::nullopt;

  PoseDetection det;
  det.camera_id = cam.camera_id;
  det.t = person.t;
  det.orientation_cam_deg = orientation_cam;
  if (anchor) {
    const Eigen::Vector3d a = to_cam(*anchor);
    if (a.z() <= 1e-9) return std::nullopt;
    det.pose = render_skeleton(to_px(a), rig.k(0, 0) / a.z(), orientation_cam);
  } else {
    det.pose = true_pose;
  }
  det.bbox = tight_square(det.pose, 0.1);
  return det;
}

NoisyDetections inject_noise(std::span<const LabeledDetection> detections, std::span<const CameraSpec> cameras,
                             const NoiseSpec& spec, std::uint64_t seed, Frame t_begin, Frame t_end) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::map<std::string, geometry::CameraModel> models;
  for (const auto& c : cameras) models.emplace(c.camera_id, to_camera_model(c));

  NoisyDetections out;
  for (const auto& ld : detections) {
    const PoseDetection& d = ld.detection;
    auto event = [&](const char* kind, double value) {
      out.ledger.push_back({d.t, d.camera_id, ld.person_id, kind, value});
    };

    if (spec.fn_base_prob > 0.0 || spec.fn_distance_slope > 0.0) {
      double dist = 0.0;
      if (spec.fn_distance_slope > 0.0) {
        const auto it = models.find(d.camera_id);
        if (it == models.end()) throw ValidationError("no camera " + d.camera_id + " for distance-dependent drops");
        const Vec2 floor = geometry::apply_homography(it->second.homography, geometry::foot_point(d.pose));
        dist = (floor - it->second.position).norm();
      }
      const double p = std::clamp(spec.fn_base_prob + spec.fn_distance_slope * dist, 0.0, 1.0);
      if (uniform(rng) < p) {
        event("drop", p);
        continue;
      }
    }

    LabeledDetection noisy = ld;
    PoseDetection& nd = noisy.detection;
    bool moved = false;
    if (spec.flip_prob > 0.0 && uniform(rng) < spec.flip_prob) {
      nd.pose = nd.pose.mirrored();
      event("flip", 0.0);
    }
    if (spec.keypoint_sigma_px > 0.0) {
      double sq = 0.0;
      std::size_t n = 0;
      for (auto& kp : nd.pose.keypoints) {
        if (!kp.visible) continue;
        const double du = spec.keypoint_sigma_px * normal(rng);
        const double dv = spec.keypoint_sigma_px * normal(rng);
        kp.u += du;
        kp.v += dv;
        sq += du * du + dv * dv;
        ++n;
      }
      moved = n > 0;
      event("keypoint_noise", n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0);
    }
    if (spec.orientation_sigma_deg > 0.0 && nd.orientation_cam_deg) {
      const double delta = spec.orientation_sigma_deg * normal(rng);
      nd.orientation_cam_deg = wrap_degrees(*nd.orientation_cam_deg + delta);
      event("orientation_noise", delta);
    }
    if (moved) nd.bbox = tight_square(nd.pose, 0.1);
    out.detections.push_back(std::move(noisy));
  }

  for (const auto& cam : cameras) {
    for (int g = 0; g < spec.ghost_count; ++g) {
      const Vec2 foot(cam.image_size.width * (0.2 + 0.6 * uniform(rng)),
                      cam.image_size.height * (0.5 + 0.4 * uniform(rng)));
      const double scale = cam.image_size.height / 8.0;
      const double heading = 360.0 * uniform(rng);
      const std::string id = "ghost:" + cam.camera_id + ":" + std::to_string(g);
      PoseDetection ghost;
      ghost.camera_id = cam.camera_id;
      ghost.pose = render_skeleton(foot, scale, heading);
      ghost.bbox = tight_square(ghost.pose, 0.1);
      ghost.orientation_cam_deg = heading;
      out.ledger.push_back({t_begin, cam.camera_id, id, "ghost", static_cast<double>(t_end - t_begin)});
      for (Frame t = t_begin; t < t_end; ++t) {
        ghost.t = t;
        out.detections.push_back({ghost, id});
      }
    }
  }
  return out;
}

SimulationResult simulate(const Scenario& s) {
  SimulationResult res;
  res.ground_truth = synthesize_trajectories(s);
  for (const auto& c : s.cameras) res.cameras.push_back(to_camera_model(c));

  // Floor offsets draw from a separate stream.
  std::mt19937_64 offset_rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<LabeledDetection> clean;
  std::vector<NoiseEvent> offset_events;
  for (const auto& cam : s.cameras) {
    for (const auto& g : res.ground_truth) {
      std::optional<Vec2> anchor;
      if (s.noise.has_floor_offsets()) {
        Vec2 off = Vec2::Zero();
        if (const auto it = s.noise.localization_bias.find(cam.camera_id); it != s.noise.localization_bias.end())
          off += it->second;
        if (s.noise.loc_error_per_meter > 0.0) {
          const double ang = 2.0 * std::numbers::pi * uniform(offset_rng);
          off += s.noise.loc_error_per_meter * (g.location - cam.position).norm() * Vec2(std::cos(ang), std::sin(ang));
        }
        if (s.noise.loc_error_sigma > 0.0) {
          const double ex = normal(offset_rng);
          const double ey = normal(offset_rng);
          off += s.noise.loc_error_sigma * Vec2(ex, ey);
        }
        anchor = g.location + off;
        offset_events.push_back({g.t, cam.camera_id, g.person_id, "floor_offset", off.norm()});
      }
      if (auto det = project_to_camera(cam, g, anchor)) clean.push_back({std::move(*det), g.person_id});
    }
  }

  Frame t_end = s.duration;
  if (t_end == 0)
    for (const auto& g : res.ground_truth) t_end = std::max(t_end, g.t + 1);
  auto noisy = inject_noise(clean, s.cameras, s.noise, s.seed, 0, t_end);
  res.ledger = std::move(offset_events);
  res.ledger.insert(res.ledger.end(), noisy.ledger.begin(), noisy.ledger.end());
  res.labeled = std::move(noisy.detections);
  std::stable_sort(res.labeled.begin(), res.labeled.end(), [](const LabeledDetection& a, const LabeledDetection& b) {
    if (a.detection.camera_id != b.detection.camera_id) return a.detection.camera_id < b.detection.camera_id;
    if (a.detection.t != b.detection.t) return a.detection.t < b.detection.t;
    return a.person_id < b.person_id;
  });
  for (const auto& c : s.cameras) res.detections[c.camera_id];
  for (const auto& ld : res.labeled) res.detections[ld.detection.camera_id].push_back(ld.detection);
  return res;
}

std::vector<WorldObservation> simulate_world_observations(std::span<const GroundTruthRecord> gt,
                                                          const WorldNoise& noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<WorldObservation> out;
  for (const auto& g : gt) {
    if (noise.fn_prob > 0.0 && uniform(rng) < noise.fn_prob) continue;
    WorldObservation o;
    o.t = g.t;
    o.location = g.location;
    if (noise.position_sigma > 0.0) {
      const double ex = normal(rng);
      const double ey = normal(rng);
      o.location += noise.position_sigma * Vec2(ex, ey);
    }
    double heading = g.orientation_deg;
    if (noise.orientation_sigma_deg > 0.0) heading += noise.orientation_sigma_deg * normal(rng);
    o.orientation = heading_to_vector(heading);
    o.source_cameras = {"world"};
    o.weight_mass = 1.0;
    out.push_back(std::move(o));
  }
  std::stable_sort(out.begin(), out.end(), [](const WorldObservation& a, const WorldObservation& b) { return a.t < b.t; });
  return out;
}

}  // namespace mvtrack::sim
