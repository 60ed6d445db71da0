#pragma once

#include "mvtrack/geometry.hpp"
#include "mvtrack/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvtrack::fusion {

/// One camera's view of one person at one frame, already on the floor.
struct ViewSample {
  std::string camera_id;
  Frame t = 0;
  Vec2 location = Vec2::Zero();
  /// Unit site-frame facing vector.
  std::optional<Vec2> orientation;
  /// Squared floor distance to the camera, m^2.
  double camera_distance_sq = 0.0;
};

struct ProximityGraph {
  std::vector<ViewSample> vertices;
  /// Index pairs (a < b), sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Disjoint-set forest with path halving and union by rank.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);

  std::size_t find(std::size_t x);
  /// Returns false when `a` and `b` were already joined.
  bool unite(std::size_t a, std::size_t b);
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

/// Edge between samples from different cameras within `radius` metres.
ProximityGraph build_graph(std::vector<ViewSample> samples, double radius = 1.5);

/// Vertex indices of each component. Components are ordered by their smallest
/// member and members ascend.
std::vector<std::vector<std::size_t>> connected_components(const ProximityGraph& g);

struct FusionConfig {
  double radius = 1.5;
  /// Floor on the squared camera distance used in the weights, m^2.
  double min_distance_sq = 0.25;
};

/// Inverse-squared-distance weighted mean of a component. Throws EmptyComponent
/// on empty input.
WorldObservation integrate(std::span<const ViewSample> cc, double min_distance_sq = 0.25);

/// Graph, components and integration for one frame. Throws
/// std::invalid_argument if the samples do not share one frame.
std::vector<WorldObservation> fuse_frame(std::span<const ViewSample> samples, const FusionConfig& cfg = {});

enum class OrientationSource {
  /// Use the detection's camera-relative estimate only.
  Estimate,
  /// Fall back to the face-keypoint heuristic when no estimate is present.
  EstimateOrHeuristic,
  Heuristic,
};

/// Floor position of a detection's feet plus its site-frame orientation.
/// Throws NoFeetVisible or HorizonPoint when the feet cannot be placed.
ViewSample localize(const PoseDetection& det, const geometry::CameraModel& cam,
                    OrientationSource source = OrientationSource::EstimateOrHeuristic);

}  // namespace mvtrack::fusion
