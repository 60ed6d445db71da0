#pragma once

#include "mvtrack/fusion.hpp"
#include "mvtrack/geometry.hpp"
#include "mvtrack/io.hpp"
#include "mvtrack/metrics.hpp"
#include "mvtrack/model.hpp"
#include "mvtrack/pose_preproc.hpp"
#include "mvtrack/tracker.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvtrack::pipeline {

namespace fs = std::filesystem;

struct Paths {
  std::optional<fs::path> scenario;
  std::optional<fs::path> points;
  std::optional<fs::path> calibration;
  std::optional<fs::path> detections;
  std::optional<fs::path> gt;
  std::optional<fs::path> tracks;
};

enum class TrackerKind { Kalman, HungarianBaseline };

/// Parses "kalman" or "hungarian-baseline"; throws ValidationError otherwise.
TrackerKind parse_tracker_kind(const std::string& name);

struct PipelineConfig {
  Paths paths;
  preproc::PreprocessConfig preprocess;
  fusion::FusionConfig fusion;
  fusion::OrientationSource orientation_source = fusion::OrientationSource::EstimateOrHeuristic;
  tracker::TrackerConfig tracker;
  TrackerKind tracker_kind = TrackerKind::Kalman;
  metrics::EvalConfig metrics;

  /// Throws ValidationError on any out-of-range parameter.
  void validate() const;
};

/// Unknown keys are rejected. Relative paths are resolved against `base_dir`.
PipelineConfig config_from_json(const io::Json& j, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

/// Ghost removal, pose tracking and smoothing for every camera, one task per
/// camera. The pixel tracker takes each camera's image width from `cameras`.
std::map<std::string, std::vector<PoseDetection>> preprocess_all(
    const std::map<std::string, std::vector<PoseDetection>>& by_camera, std::span<const geometry::CameraModel> cameras,
    const preproc::PreprocessConfig& cfg);

/// Every detection placed on the floor, then fused per frame. Detections whose
/// feet cannot be placed are skipped. Output is ordered by frame.
std::vector<WorldObservation> localize_and_fuse(std::span<const PoseDetection> detections,
                                                std::span<const geometry::CameraModel> cameras,
                                                const fusion::FusionConfig& cfg,
                                                fusion::OrientationSource source);

std::vector<Track> track(std::span<const WorldObservation> observations, const tracker::TrackerConfig& cfg,
                         TrackerKind kind);

/// Detections grouped by camera id, each group ordered by frame.
std::map<std::string, std::vector<PoseDetection>> group_by_camera(std::span<const PoseDetection> detections);

/// Options shared by every command; explicit values override the config file.
struct CommandOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  fs::path out = ".";
  Paths paths;
  std::optional<TrackerKind> tracker_kind;
};

/// Config file (or defaults) with the command-line overrides applied.
PipelineConfig resolve(const CommandOptions& opts);

/// Writes scenario.json, gt.jsonl, detections/<camera>.jsonl, calibration.json,
/// points.json and ledger.jsonl.
void cmd_simulate(const CommandOptions& opts);
/// Writes calibration.json from a points file.
void cmd_calibrate(const CommandOptions& opts);
/// Writes preprocessed/<camera>.jsonl.
void cmd_preprocess(const CommandOptions& opts);
/// Writes tracks.jsonl.
void cmd_track(const CommandOptions& opts);
/// Writes report.json and report.txt; returns the report.
metrics::EvalReport cmd_evaluate(const CommandOptions& opts);
/// Writes factors.csv and correlation.json.
void cmd_analyze(const CommandOptions& opts);

}  // namespace mvtrack::pipeline
