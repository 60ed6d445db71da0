#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/geometry.hpp"
#include "mvtrack/metrics.hpp"
#include "mvtrack/model.hpp"
#include "mvtrack/simulator.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mvtrack::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Record <-> JSON. Parsers throw ValidationError naming the offending field.
Json to_json(const PoseDetection& d);
PoseDetection detection_from_json(const Json& j);
Json to_json(const GroundTruthRecord& g);
GroundTruthRecord gt_from_json(const Json& j);
/// One line of a tracks file.
Json to_json(int track_id, const TrackState& s);
Json to_json(const geometry::CameraModel& cam);
geometry::CameraModel camera_from_json(const Json& j);
Json to_json(const sim::NoiseEvent& e);
sim::NoiseEvent noise_event_from_json(const Json& j);

/// Applies `parse` to every non-empty line. Errors carry the file and 1-based line.
template <class T, class Parse>
std::vector<T> read_jsonl(const fs::path& path, Parse parse);

std::string read_text(const fs::path& path);
/// Writes atomically enough for a CLI: creates parent directories first.
void write_text(const fs::path& path, const std::string& text);
Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

/// One compact JSON object per line, LF terminated.
std::string to_jsonl(std::span<const Json> records);

std::vector<PoseDetection> read_detections(const fs::path& path);
/// A single .jsonl file, or every .jsonl file in a directory in name order.
std::vector<PoseDetection> read_detections_any(const fs::path& path);
void write_detections(const fs::path& path, std::span<const PoseDetection> detections);

std::vector<GroundTruthRecord> read_ground_truth(const fs::path& path);
void write_ground_truth(const fs::path& path, std::span<const GroundTruthRecord> gt);

/// Tracks ordered by id with states ordered by time. Velocities, rates and
/// covariances are not stored and read back as zero.
std::vector<Track> read_tracks(const fs::path& path);
void write_tracks(const fs::path& path, std::span<const Track> tracks);

std::vector<geometry::CameraModel> read_calibration(const fs::path& path);
void write_calibration(const fs::path& path, std::span<const geometry::CameraModel> cameras);

std::vector<sim::NoiseEvent> read_noise_ledger(const fs::path& path);
void write_noise_ledger(const fs::path& path, std::span<const sim::NoiseEvent> ledger);

/// Correspondences for one camera plus the metadata copied into the calibration.
struct CameraPoints {
  geometry::CameraModel meta;
  std::array<Vec2, 4> pixel_points;
  std::array<Vec2, 4> world_points;
};
std::vector<CameraPoints> read_points(const fs::path& path);
Json to_json(const CameraPoints& p);

sim::Scenario scenario_from_json(const Json& j);
Json to_json(const sim::Scenario& s);

Json to_json(const metrics::MotSummary& s);
Json to_json(const metrics::EvalReport& r);
/// Aligned plain-text table of the report.
std::string report_table(const metrics::EvalReport& r);

std::string factors_csv(std::span<const metrics::FactorSample> samples);
Json to_json(std::span<const metrics::FactorCorrelation> correlations);

// Template definition.
template <class T, class Parse>
std::vector<T> read_jsonl(const fs::path& path, Parse parse) {
  const std::string text = read_text(path);
  std::vector<T> out;
  std::size_t pos = 0;
  long line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      if (end == text.size()) break;
      continue;
    }
    try {
      out.push_back(parse(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), path.string(), line_no);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), path.string(), line_no);
    }
    if (end == text.size()) break;
  }
  return out;
}

}  // namespace mvtrack::io
