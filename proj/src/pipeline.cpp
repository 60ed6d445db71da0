#include "mvtrack/pipeline.hpp"

#include "mvtrack/errors.hpp"
#include "mvtrack/simulator.hpp"

#include <algorithm>
#include <future>
#include <initializer_list>
#include <set>

namespace mvtrack::pipeline {
namespace {

using io::Json;

void check_keys(const Json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ValidationError("unknown config key '" + section + "." + key + "'");
  }
}

template <class T>
void read(const Json& j, const char* key, T& into) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    into = j[key].get<T>();
  } catch (const Json::exception&) {
    throw ValidationError(std::string("config key '") + key + "' has the wrong type");
  }
}

void read_path(const Json& j, const char* key, std::optional<fs::path>& into, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return;
  if (!j[key].is_string()) throw ValidationError(std::string("config path '") + key + "' must be a string");
  fs::path p = j[key].get<std::string>();
  into = p.is_absolute() ? p : base / p;
}

fs::path require(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw ValidationError(std::string("no ") + what + " path given (use the flag or the config file)");
  if (!fs::exists(*p)) throw ValidationError(std::string(what) + " path does not exist", p->string());
  return *p;
}

}  // namespace

TrackerKind parse_tracker_kind(const std::string& name) {
  if (name == "kalman") return TrackerKind::Kalman;
  if (name == "hungarian-baseline") return TrackerKind::HungarianBaseline;
  throw ValidationError("unknown tracker '" + name + "' (expected kalman or hungarian-baseline)");
}

void PipelineConfig::validate() const {
  tracker.validate();
  metrics.validate();
  if (!(fusion.radius > 0.0)) throw ValidationError("fusion radius must be positive");
  if (!(fusion.min_distance_sq > 0.0)) throw ValidationError("fusion min_distance_sq must be positive");
  const auto& p = preprocess;
  if (p.ghost_window < 1) throw ValidationError("preprocess ghost_window must be at least 1");
  if (!(p.ghost_eps > 0.0)) throw ValidationError("preprocess ghost_eps must be positive");
  if (p.tracker.gate_px && !(*p.tracker.gate_px > 0.0)) throw ValidationError("preprocess gate_px must be positive");
  if (!(p.tracker.process_accel_sigma > 0.0) || !(p.tracker.measurement_sigma > 0.0))
    throw ValidationError("preprocess sigmas must be positive");
  if (p.tracker.max_coast < 0) throw ValidationError("preprocess max_coast must be non-negative");
  if (!(p.bbox_inflate >= 0.0)) throw ValidationError("preprocess bbox_inflate must be non-negative");
}

PipelineConfig config_from_json(const Json& j, const fs::path& base_dir) {
  PipelineConfig cfg;
  check_keys(j, "config", {"paths", "preprocess", "fusion", "tracker", "metrics"});
  if (j.contains("paths")) {
    const Json& p = j["paths"];
    check_keys(p, "paths", {"scenario", "points", "calibration", "detections", "gt", "tracks"});
    read_path(p, "scenario", cfg.paths.scenario, base_dir);
    read_path(p, "points", cfg.paths.points, base_dir);
    read_path(p, "calibration", cfg.paths.calibration, base_dir);
    read_path(p, "detections", cfg.paths.detections, base_dir);
    read_path(p, "gt", cfg.paths.gt, base_dir);
    read_path(p, "tracks", cfg.paths.tracks, base_dir);
  }
  if (j.contains("preprocess")) {
    const Json& p = j["preprocess"];
    check_keys(p, "preprocess",
               {"ghost_window", "ghost_eps", "gate_px", "flip_correction", "fill_gaps", "bbox_inflate",
                "process_accel_sigma", "measurement_sigma", "max_coast", "min_shared_keypoints"});
    auto& pc = cfg.preprocess;
    read(p, "ghost_window", pc.ghost_window);
    read(p, "ghost_eps", pc.ghost_eps);
    if (p.contains("gate_px") && !p["gate_px"].is_null()) {
      double g = 0.0;
      read(p, "gate_px", g);
      pc.tracker.gate_px = g;
    }
    read(p, "flip_correction", pc.tracker.flip_correction);
    read(p, "fill_gaps", pc.fill_gaps);
    read(p, "bbox_inflate", pc.bbox_inflate);
    read(p, "process_accel_sigma", pc.tracker.process_accel_sigma);
    read(p, "measurement_sigma", pc.tracker.measurement_sigma);
    read(p, "max_coast", pc.tracker.max_coast);
    read(p, "min_shared_keypoints", pc.tracker.min_shared_keypoints);
  }
  if (j.contains("fusion")) {
    const Json& f = j["fusion"];
    check_keys(f, "fusion", {"radius", "min_distance_sq", "orientation_source"});
    read(f, "radius", cfg.fusion.radius);
    read(f, "min_distance_sq", cfg.fusion.min_distance_sq);
    std::string src;
    read(f, "orientation_source", src);
    if (src == "estimate")
      cfg.orientation_source = fusion::OrientationSource::Estimate;
    else if (src == "heuristic")
      cfg.orientation_source = fusion::OrientationSource::Heuristic;
    else if (src == "estimate_or_heuristic" || src.empty())
      cfg.orientation_source = fusion::OrientationSource::EstimateOrHeuristic;
    else
      throw ValidationError("unknown orientation_source '" + src + "'");
  }
  if (j.contains("tracker")) {
    const Json& t = j["tracker"];
    check_keys(t, "tracker",
               {"kind", "gate", "max_coast", "w_motion", "dt", "process_accel_sigma", "measurement_sigma",
                "velocity_sigma", "velocity_init", "orientation_mode", "min_speed", "orientation_blend"});
    auto& tc = cfg.tracker;
    std::string kind;
    read(t, "kind", kind);
    if (!kind.empty()) cfg.tracker_kind = parse_tracker_kind(kind);
    read(t, "gate", tc.gate);
    read(t, "max_coast", tc.max_coast);
    read(t, "w_motion", tc.w_motion);
    read(t, "dt", tc.dt);
    read(t, "process_accel_sigma", tc.process_accel_sigma);
    read(t, "measurement_sigma", tc.measurement_sigma);
    read(t, "velocity_sigma", tc.velocity_sigma);
    read(t, "min_speed", tc.min_speed);
    read(t, "orientation_blend", tc.orientation_blend);
    std::string init, mode;
    read(t, "velocity_init", init);
    if (init == "prior")
      tc.velocity_init = filtering::VelocityInit::Prior;
    else if (init == "two_point" || init.empty())
      tc.velocity_init = filtering::VelocityInit::TwoPoint;
    else
      throw ValidationError("unknown velocity_init '" + init + "'");
    read(t, "orientation_mode", mode);
    if (mode == "literal")
      tc.orientation_mode = tracker::OrientationMode::Literal;
    else if (mode == "normalized" || mode.empty())
      tc.orientation_mode = tracker::OrientationMode::Normalized;
    else
      throw ValidationError("unknown orientation_mode '" + mode + "'");
  }
  if (j.contains("metrics")) {
    const Json& m = j["metrics"];
    check_keys(m, "metrics", {"gate", "accuracy_x", "count_coasted", "areas"});
    read(m, "gate", cfg.metrics.gate);
    read(m, "accuracy_x", cfg.metrics.accuracy_x);
    read(m, "count_coasted", cfg.metrics.count_coasted);
    if (m.contains("areas")) {
      if (!m["areas"].is_array()) throw ValidationError("metrics.areas must be an array");
      for (const auto& a : m["areas"]) {
        check_keys(a, "metrics.areas[]", {"id", "x_min", "y_min", "x_max", "y_max"});
        metrics::Area area;
        read(a, "id", area.id);
        read(a, "x_min", area.x_min);
        read(a, "y_min", area.y_min);
        read(a, "x_max", area.x_max);
        read(a, "y_max", area.y_max);
        if (area.id.empty()) throw ValidationError("every metrics area needs an id");
        cfg.metrics.areas.push_back(std::move(area));
      }
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  const Json j = io::read_json(path);
  try {
    return config_from_json(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), path.string());
  }
}

std::map<std::string, std::vector<PoseDetection>> group_by_camera(std::span<const PoseDetection> detections) {
  std::map<std::string, std::vector<PoseDetection>> out;
  for (const auto& d : detections) out[d.camera_id].push_back(d);
  for (auto& [id, v] : out)
    std::stable_sort(v.begin(), v.end(), [](const PoseDetection& a, const PoseDetection& b) { return a.t < b.t; });
  return out;
}

std::map<std::string, std::vector<PoseDetection>> preprocess_all(
    const std::map<std::string, std::vector<PoseDetection>>& by_camera, std::span<const geometry::CameraModel> cameras,
    const preproc::PreprocessConfig& cfg) {
  std::map<std::string, std::future<std::vector<PoseDetection>>> jobs;
  for (const auto& [id, dets] : by_camera) {
    preproc::PreprocessConfig local = cfg;
    for (const auto& c : cameras)
      if (c.camera_id == id) local.tracker.image_width = c.image_size.width;
    jobs.emplace(id, std::async(std::launch::async, [local, &dets = dets] { return preproc::preprocess_camera(dets, local); }));
  }
  std::map<std::string, std::vector<PoseDetection>> out;
  for (auto& [id, job] : jobs) out[id] = job.get();
  return out;
}

std::vector<WorldObservation> localize_and_fuse(std::span<const PoseDetection> detections,
                                                std::span<const geometry::CameraModel> cameras,
                                                const fusion::FusionConfig& cfg, fusion::OrientationSource source) {
  std::map<std::string, const geometry::CameraModel*> cams;
  for (const auto& c : cameras) cams[c.camera_id] = &c;
  std::map<Frame, std::vector<fusion::ViewSample>> frames;
  for (const auto& d : detections) {
    const auto it = cams.find(d.camera_id);
    if (it == cams.end()) throw ValidationError("detection references camera " + d.camera_id + " missing from calibration");
    try {
      frames[d.t].push_back(fusion::localize(d, *it->second, source));
    } catch (const NoFeetVisible&) {
    } catch (const HorizonPoint&) {
    }
  }
  std::vector<WorldObservation> out;
  for (const auto& [t, samples] : frames) {
    auto fused = fusion::fuse_frame(samples, cfg);
    out.insert(out.end(), std::make_move_iterator(fused.begin()), std::make_move_iterator(fused.end()));
  }
  return out;
}

std::vector<Track> track(std::span<const WorldObservation> observations, const tracker::TrackerConfig& cfg,
                         TrackerKind kind) {
  if (kind == TrackerKind::HungarianBaseline) return tracker::baseline_hungarian_run(observations, cfg.gate);
  return tracker::run(observations, cfg);
}

PipelineConfig resolve(const CommandOptions& opts) {
  PipelineConfig cfg = opts.config ? load_config(*opts.config) : PipelineConfig{};
  auto over = [](std::optional<fs::path>& into, const std::optional<fs::path>& from) {
    if (from) into = from;
  };
  over(cfg.paths.scenario, opts.paths.scenario);
  over(cfg.paths.points, opts.paths.points);
  over(cfg.paths.calibration, opts.paths.calibration);
  over(cfg.paths.detections, opts.paths.detections);
  over(cfg.paths.gt, opts.paths.gt);
  over(cfg.paths.tracks, opts.paths.tracks);
  if (opts.tracker_kind) cfg.tracker_kind = *opts.tracker_kind;
  return cfg;
}

void cmd_simulate(const CommandOptions& opts) {
  const PipelineConfig cfg = resolve(opts);
  const fs::path scenario_path = require(cfg.paths.scenario, "scenario");
  sim::Scenario scenario;
  try {
    scenario = io::scenario_from_json(io::read_json(scenario_path));
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), scenario_path.string());
  }
  if (opts.seed) scenario.seed = *opts.seed;
  const sim::SimulationResult res = sim::simulate(scenario);

  io::write_json(opts.out / "scenario.json", io::to_json(scenario));
  io::write_ground_truth(opts.out / "gt.jsonl", res.ground_truth);
  for (const auto& [cam, dets] : res.detections) io::write_detections(opts.out / "detections" / (cam + ".jsonl"), dets);
  io::write_calibration(opts.out / "calibration.json", res.cameras);
  io::write_noise_ledger(opts.out / "ledger.jsonl", res.ledger);

  // Four floor correspondences per camera from the lower part of the image.
  Json points = Json::array();
  for (const auto& cam : res.cameras) {
    io::CameraPoints p;
    p.meta = cam;
    const double w = cam.image_size.width, h = cam.image_size.height;
    p.pixel_points = {Vec2(0.2 * w, 0.6 * h), Vec2(0.8 * w, 0.6 * h), Vec2(0.8 * w, 0.95 * h), Vec2(0.2 * w, 0.95 * h)};
    for (std::size_t k = 0; k < 4; ++k) p.world_points[k] = geometry::apply_homography(cam.homography, p.pixel_points[k]);
    points.push_back(io::to_json(p));
  }
  io::write_json(opts.out / "points.json", points);
}

void cmd_calibrate(const CommandOptions& opts) {
  const PipelineConfig cfg = resolve(opts);
  const auto entries = io::read_points(require(cfg.paths.points, "points"));
  std::vector<geometry::CameraModel> cams;
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.meta.camera_id).second) throw DuplicateId("camera " + e.meta.camera_id + " listed twice");
    geometry::CameraModel cam = e.meta;
    try {
      cam.homography = geometry::fit_homography(e.pixel_points, e.world_points);
    } catch (const DegenerateConfiguration& err) {
      throw DegenerateConfiguration("camera " + cam.camera_id + ": " + err.what());
    }
    cams.push_back(std::move(cam));
  }
  io::write_calibration(opts.out / "calibration.json", cams);
}

void cmd_preprocess(const CommandOptions& opts) {
  const PipelineConfig cfg = resolve(opts);
  const auto cams = io::read_calibration(require(cfg.paths.calibration, "calibration"));
  const auto dets = io::read_detections_any(require(cfg.paths.detections, "detections"));
  const auto out = preprocess_all(group_by_camera(dets), cams, cfg.preprocess);
  for (const auto& [cam, v] : out) io::write_detections(opts.out / "preprocessed" / (cam + ".jsonl"), v);
}

void cmd_track(const CommandOptions& opts) {
  const PipelineConfig cfg = resolve(opts);
  const auto cams = io::read_calibration(require(cfg.paths.calibration, "calibration"));
  const auto dets = io::read_detections_any(require(cfg.paths.detections, "detections"));
  const auto obs = localize_and_fuse(dets, cams, cfg.fusion, cfg.orientation_source);
  const auto tracks = track(obs, cfg.tracker, cfg.tracker_kind);
  io::write_tracks(opts.out / "tracks.jsonl", tracks);
}

metrics::EvalReport cmd_evaluate(const CommandOptions& opts) {
  const PipelineConfig cfg = resolve(opts);
  const auto gt = io::read_ground_truth(require(cfg.paths.gt, "gt"));
  const auto tracks = io::read_tracks(require(cfg.paths.tracks, "tracks"));
  const auto report = metrics::evaluate(gt, tracks, cfg.metrics);
  io::write_json(opts.out / "report.json", io::to_json(report));
  io::write_text(opts.out / "report.txt", io::report_table(report));
  return report;
}

void cmd_analyze(const CommandOptions& opts) {
  const PipelineConfig cfg = resolve(opts);
  const auto cams = io::read_calibration(require(cfg.paths.calibration, "calibration"));
  const auto dets = io::read_detections_any(require(cfg.paths.detections, "detections"));
  const auto gt = io::read_ground_truth(require(cfg.paths.gt, "gt"));
  const auto samples = metrics::collect_factor_samples(dets, cams, gt, cfg.metrics.gate);
  io::write_text(opts.out / "factors.csv", io::factors_csv(samples));
  const auto corr = metrics::factor_analysis(samples);
  io::write_json(opts.out / "correlation.json", io::to_json(std::span<const metrics::FactorCorrelation>(corr)));
}

}  // namespace mvtrack::pipeline
