#include "mvtrack/fusion.hpp"

#include "mvtrack/errors.hpp"
#include "mvtrack/pose_preproc.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace mvtrack::fusion {

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  return true;
}

ProximityGraph build_graph(std::vector<ViewSample> samples, double radius) {
  ProximityGraph g;
  g.vertices = std::move(samples);
  const auto& v = g.vertices;
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b)
      if (v[a].camera_id != v[b].camera_id && (v[a].location - v[b].location).norm() <= radius)
        g.edges.emplace_back(a, b);
  return g;
}

std::vector<std::vector<std::size_t>> connected_components(const ProximityGraph& g) {
  UnionFind uf(g.vertices.size());
  for (const auto& [a, b] : g.edges) uf.unite(a, b);
  std::map<std::size_t, std::size_t> slot;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    const auto [it, inserted] = slot.try_emplace(uf.find(i), out.size());
    if (inserted) out.emplace_back();
    out[it->second].push_back(i);
  }
  return out;
}

WorldObservation integrate(std::span<const ViewSample> cc, double min_distance_sq) {
  if (cc.empty()) throw EmptyComponent("cannot integrate an empty component");
  WorldObservation obs;
  obs.t = cc.front().t;

  Vec2 loc = Vec2::Zero();
  Vec2 dir = Vec2::Zero();
  double total = 0.0;
  const ViewSample* closest_oriented = nullptr;
  for (const auto& s : cc) {
    const double w = 1.0 / std::max(s.camera_distance_sq, min_distance_sq);
    loc += w * s.location;
    total += w;
    obs.weight_mass += w;
    if (s.orientation) {
      dir += w * *s.orientation;
      if (!closest_oriented || s.camera_distance_sq < closest_oriented->camera_distance_sq) closest_oriented = &s;
    }
    if (std::find(obs.source_cameras.begin(), obs.source_cameras.end(), s.camera_id) == obs.source_cameras.end())
      obs.source_cameras.push_back(s.camera_id);
  }
  obs.location = loc / total;
  if (closest_oriented) {
    if (dir.norm() >= 1e-6)
      obs.orientation = dir.normalized();
    else
      obs.orientation = closest_oriented->orientation->normalized();
  }
  std::sort(obs.source_cameras.begin(), obs.source_cameras.end());
  return obs;
}

std::vector<WorldObservation> fuse_frame(std::span<const ViewSample> samples, const FusionConfig& cfg) {
  if (samples.empty()) return {};
  for (const auto& s : samples)
    if (s.t != samples.front().t) throw std::invalid_argument("fuse_frame: samples span several frames");
  const ProximityGraph g = build_graph({samples.begin(), samples.end()}, cfg.radius);
  std::vector<WorldObservation> out;
  for (const auto& comp : connected_components(g)) {
    std::vector<ViewSample> members;
    members.reserve(comp.size());
    for (std::size_t i : comp) members.push_back(g.vertices[i]);
    out.push_back(integrate(members, cfg.min_distance_sq));
  }
  return out;
}

ViewSample localize(const PoseDetection& det, const geometry::CameraModel& cam, OrientationSource source) {
  ViewSample s;
  s.camera_id = det.camera_id;
  s.t = det.t;
  const Vec2 foot = geometry::foot_point(det.pose);
  s.location = geometry::apply_homography(cam.homography, foot);
  s.camera_distance_sq = (s.location - cam.position).squaredNorm();

  if (source != OrientationSource::Heuristic && det.orientation_cam_deg) {
    s.orientation = geometry::rotate_to_world(cam, heading_to_vector(*det.orientation_cam_deg));
    return s;
  }
  if (source == OrientationSource::Estimate) return s;
  if (const auto dir = preproc::heuristic_orientation(det.pose)) {
    try {
      s.orientation = geometry::project_direction(cam.homography, foot, *dir);
    } catch (const Error&) {
      s.orientation.reset();
    }
  }
  return s;
}

}  // namespace mvtrack::fusion
