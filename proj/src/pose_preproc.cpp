#include "mvtrack/pose_preproc.hpp"

#include "mvtrack/assignment.hpp"
#include "mvtrack/filtering.hpp"

#include <algorithm>
#include <map>
#include <memory>

namespace mvtrack::preproc {
namespace {

constexpr std::size_t kCoords = 2 * kNumKeypoints;

struct Observation {
  std::size_t det_index = 0;
  Pose2D corrected;
  bool swapped = false;
};

struct LiveTrack {
  int id = 0;
  Frame first_t = 0;
  filtering::TrackFilter filter;
  int coast = 0;
  std::vector<std::optional<Observation>> obs;
};

filtering::LinearCVModel pixel_model(const PoseTrackerConfig& cfg) {
  return {kCoords, cfg.dt, cfg.process_accel_sigma, cfg.measurement_sigma};
}

Eigen::VectorXd to_vector(const Pose2D& pose) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(kCoords));
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    z(static_cast<Eigen::Index>(2 * i)) = pose[i].u;
    z(static_cast<Eigen::Index>(2 * i + 1)) = pose[i].v;
  }
  return z;
}

std::array<bool, kCoords> to_mask(const Pose2D& pose) {
  std::array<bool, kCoords> m{};
  for (std::size_t i = 0; i < kNumKeypoints; ++i) m[2 * i] = m[2 * i + 1] = pose[i].visible;
  return m;
}

Pose2D predicted_pose(const filtering::TrackFilter& f) {
  const Eigen::VectorXd mean = f.current().mean;
  Pose2D p;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    p[i].u = mean(static_cast<Eigen::Index>(2 * i));
    p[i].v = mean(static_cast<Eigen::Index>(2 * i + 1));
    p[i].visible = f.known(2 * i) && f.known(2 * i + 1);
    p[i].confidence = p[i].visible ? 1.0 : 0.0;
  }
  return p;
}

void observe(filtering::TrackFilter& f, const Pose2D& pose, bool first) {
  const auto mask = to_mask(pose);
  if (first)
    f.start(to_vector(pose), mask);
  else
    f.update(to_vector(pose), mask);
}

PixelTrack finalize(LiveTrack& live, std::span<const PoseDetection> detections, const PoseTrackerConfig& cfg) {
  // A track whose observations are mostly mirrored has every decision inverted.
  std::size_t observed = 0, swapped = 0;
  for (const auto& o : live.obs) {
    if (!o) continue;
    ++observed;
    if (o->swapped) ++swapped;
  }
  if (cfg.flip_correction && 2 * swapped > observed) {
    for (auto& o : live.obs) {
      if (!o) continue;
      o->corrected = o->corrected.mirrored();
      o->swapped = !o->swapped;
    }
  }

  std::size_t last = 0;
  for (std::size_t k = 0; k < live.obs.size(); ++k)
    if (live.obs[k]) last = k;

  filtering::TrackFilter f(pixel_model(cfg), cfg.velocity_sigma());
  for (std::size_t k = 0; k <= last; ++k) {
    if (k > 0) f.predict();
    if (live.obs[k]) observe(f, live.obs[k]->corrected, k == 0);
  }
  const auto smoothed = f.smoothed();

  PixelTrack out;
  out.track_id = live.id;
  out.camera_id = detections[live.obs.front()->det_index].camera_id;
  out.status = TrackStatus::Finished;

  std::array<bool, kNumKeypoints> seen{};
  std::array<double, kNumKeypoints> last_conf{};
  for (std::size_t k = 0; k <= last; ++k) {
    PixelFrame fr;
    fr.t = live.first_t + static_cast<Frame>(k);
    const Eigen::VectorXd& m = smoothed[k].mean;
    const auto& o = live.obs[k];
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      Keypoint& kp = fr.pose[i];
      kp.u = m(static_cast<Eigen::Index>(2 * i));
      kp.v = m(static_cast<Eigen::Index>(2 * i + 1));
      if (o) {
        kp.visible = o->corrected[i].visible;
        kp.confidence = o->corrected[i].confidence;
        if (kp.visible) {
          seen[i] = true;
          last_conf[i] = kp.confidence;
        }
      } else {
        kp.visible = seen[i];
        kp.confidence = seen[i] ? last_conf[i] : 0.0;
      }
    }
    fr.observed = o.has_value();
    if (o) {
      fr.raw = o->corrected;
      fr.swapped = o->swapped;
      fr.detection_index = o->det_index;
      fr.orientation_cam_deg = detections[o->det_index].orientation_cam_deg;
    }
    out.frames.push_back(std::move(fr));
  }
  return out;
}

}  // namespace

PoseDistance pose_distance(const Pose2D& a, const Pose2D& b) {
  PoseDistance d;
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    if (!a[i].visible || !b[i].visible) continue;
    sum += (a[i].pixel() - b[i].pixel()).norm();
    ++d.shared;
  }
  if (d.shared > 0) d.mean = sum / static_cast<double>(d.shared);
  return d;
}

Pose2D correct_lr_flip(const Pose2D& prediction, const Pose2D& detection, double margin_px) {
  const Pose2D mirrored = detection.mirrored();
  const PoseDistance direct = pose_distance(prediction, detection);
  const PoseDistance swapped = pose_distance(prediction, mirrored);
  if (direct.shared == 0 || swapped.shared == 0) return detection;
  return swapped.mean < direct.mean - margin_px ? mirrored : detection;
}

std::optional<Vec2> heuristic_orientation(const Pose2D& pose) {
  if (!pose[Joint::Nose].visible) return std::nullopt;
  Vec2 ref = Vec2::Zero();
  int n = 0;
  for (Joint j : {Joint::LeftEye, Joint::RightEye, Joint::LeftEar, Joint::RightEar}) {
    if (!pose[j].visible) continue;
    ref += pose[j].pixel();
    ++n;
  }
  if (n == 0) return std::nullopt;
  const Vec2 v = pose[Joint::Nose].pixel() - ref / n;
  if (v.norm() <= 1e-12) return std::nullopt;
  return v.normalized();
}

std::vector<PixelTrack> track_poses(std::span<const PoseDetection> detections, const PoseTrackerConfig& cfg) {
  std::vector<PixelTrack> finished;
  if (detections.empty()) return finished;

  std::map<Frame, std::vector<std::size_t>> by_frame;
  for (std::size_t i = 0; i < detections.size(); ++i) by_frame[detections[i].t].push_back(i);
  const Frame t0 = by_frame.begin()->first;
  const Frame t1 = by_frame.rbegin()->first;

  const auto model = pixel_model(cfg);
  const double gate = cfg.gate();
  std::vector<LiveTrack> live;
  int next_id = 1;

  for (Frame t = t0; t <= t1; ++t) {
    for (auto& tr : live) {
      tr.filter.predict();
      tr.obs.emplace_back();
    }
    static const std::vector<std::size_t> kNone;
    const auto it = by_frame.find(t);
    const std::vector<std::size_t>& dets = it == by_frame.end() ? kNone : it->second;

    assignment::CostMatrix cost(live.size(), dets.size());
    std::vector<std::vector<Pose2D>> corrected(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const Pose2D pred = predicted_pose(live[i].filter);
      for (std::size_t j = 0; j < dets.size(); ++j) {
        const Pose2D& det = detections[dets[j]].pose;
        Pose2D use = cfg.flip_correction ? correct_lr_flip(pred, det, cfg.flip_margin_px) : det;
        const PoseDistance d = pose_distance(pred, use);
        corrected[i].push_back(use);
        if (d.shared >= cfg.min_shared_keypoints && d.mean <= gate) cost.set(i, j, d.mean);
      }
    }
    const auto result = assignment::solve(cost);

    for (const auto& [i, j] : result.pairs) {
      LiveTrack& tr = live[i];
      const Pose2D& use = corrected[i][j];
      observe(tr.filter, use, false);
      tr.coast = 0;
      const bool swapped = !std::equal(use.keypoints.begin(), use.keypoints.end(),
                                       detections[dets[j]].pose.keypoints.begin(),
                                       [](const Keypoint& a, const Keypoint& b) {
                                         return a.u == b.u && a.v == b.v && a.visible == b.visible;
                                       });
      tr.obs.back() = Observation{dets[j], use, swapped};
    }
    std::vector<LiveTrack> still_live;
    std::vector<char> matched_row(live.size(), 0);
    for (const auto& pr : result.pairs) matched_row[pr.first] = 1;
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (!matched_row[i] && ++live[i].coast > cfg.max_coast) {
        finished.push_back(finalize(live[i], detections, cfg));
        continue;
      }
      still_live.push_back(std::move(live[i]));
    }
    live = std::move(still_live);

    for (std::size_t j : result.unmatched_cols) {
      LiveTrack tr{next_id++, t, filtering::TrackFilter(model, cfg.velocity_sigma()), 0, {}};
      const Pose2D& det = detections[dets[j]].pose;
      observe(tr.filter, det, true);
      tr.obs.push_back(Observation{dets[j], det, false});
      live.push_back(std::move(tr));
    }
  }
  for (auto& tr : live) finished.push_back(finalize(tr, detections, cfg));
  std::sort(finished.begin(), finished.end(),
            [](const PixelTrack& a, const PixelTrack& b) { return a.track_id < b.track_id; });
  return finished;
}

bool is_stationary_ghost(const PixelTrack& track, int window, double eps) {
  const Pose2D* prev = nullptr;
  int observed = 0;
  for (const auto& fr : track.frames) {
    if (!fr.raw) continue;
    ++observed;
    if (prev) {
      const PoseDistance d = pose_distance(*prev, *fr.raw);
      if (d.shared == 0 || d.mean >= eps) return false;
    }
    prev = &*fr.raw;
  }
  return observed >= window;
}

std::vector<PixelTrack> remove_stationary_ghosts(std::vector<PixelTrack> tracks, int window, double eps) {
  std::erase_if(tracks, [&](const PixelTrack& t) { return is_stationary_ghost(t, window, eps); });
  return tracks;
}

std::vector<PoseDetection> remove_stationary_ghosts(std::span<const PoseDetection> stream,
                                                    const PoseTrackerConfig& cfg, int window, double eps) {
  std::vector<char> drop(stream.size(), 0);
  for (const auto& tr : track_poses(stream, cfg)) {
    if (!is_stationary_ghost(tr, window, eps)) continue;
    for (const auto& fr : tr.frames)
      if (fr.detection_index) drop[*fr.detection_index] = 1;
  }
  std::vector<PoseDetection> out;
  for (std::size_t i = 0; i < stream.size(); ++i)
    if (!drop[i]) out.push_back(stream[i]);
  return out;
}

std::vector<PoseDetection> to_detections(const std::vector<PixelTrack>& tracks, bool fill_gaps, double bbox_inflate) {
  std::vector<PoseDetection> out;
  for (const auto& tr : tracks) {
    for (const auto& fr : tr.frames) {
      if (!fr.observed && !fill_gaps) continue;
      PoseDetection d;
      d.camera_id = tr.camera_id;
      d.t = fr.t;
      d.pose = fr.pose;
      d.bbox = tight_square(fr.pose, bbox_inflate);
      d.orientation_cam_deg = fr.orientation_cam_deg;
      out.push_back(std::move(d));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const PoseDetection& a, const PoseDetection& b) { return a.t < b.t; });
  return out;
}

std::vector<PoseDetection> preprocess_camera(std::span<const PoseDetection> detections, const PreprocessConfig& cfg) {
  auto tracks = remove_stationary_ghosts(track_poses(detections, cfg.tracker), cfg.ghost_window, cfg.ghost_eps);
  return to_detections(tracks, cfg.fill_gaps, cfg.bbox_inflate);
}

}  // namespace mvtrack::preproc
