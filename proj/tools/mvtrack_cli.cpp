#include "mvtrack/errors.hpp"
#include "mvtrack/io.hpp"
#include "mvtrack/pipeline.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

namespace {

using mvtrack::io::Json;
namespace pl = mvtrack::pipeline;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void report_error(const std::string& kind, const std::string& message, const std::optional<std::string>& file = {},
                  std::optional<long> line = {}) {
  Json j;
  j["error"] = kind;
  j["message"] = message;
  if (file) j["file"] = *file;
  if (line) j["line"] = *line;
  std::cerr << j.dump() << '\n';
}

struct Flags {
  std::string config, out = ".", scenario, points, calibration, detections, gt, tracks, tracker;
  std::optional<std::uint64_t> seed;
};

pl::CommandOptions to_options(const Flags& f) {
  pl::CommandOptions o;
  auto path = [](const std::string& s) { return s.empty() ? std::optional<std::filesystem::path>{} : std::filesystem::path(s); };
  o.config = path(f.config);
  o.seed = f.seed;
  o.out = f.out;
  o.paths.scenario = path(f.scenario);
  o.paths.points = path(f.points);
  o.paths.calibration = path(f.calibration);
  o.paths.detections = path(f.detections);
  o.paths.gt = path(f.gt);
  o.paths.tracks = path(f.tracks);
  if (!f.tracker.empty()) o.tracker_kind = pl::parse_tracker_kind(f.tracker);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view people tracking pipeline"};
  app.require_subcommand(1);
  Flags flags;
  std::function<void()> action;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Pipeline configuration JSON");
    sub->add_option("--seed", flags.seed, "Random seed");
    sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
  };

  auto* simulate = app.add_subcommand("simulate", "Generate ground truth, detections and calibration from a scenario");
  common(simulate);
  simulate->add_option("--scenario", flags.scenario, "Scenario JSON");
  simulate->callback([&] { action = [&] { pl::cmd_simulate(to_options(flags)); }; });

  auto* calibrate = app.add_subcommand("calibrate", "Fit floor homographies from 4-point correspondences");
  common(calibrate);
  calibrate->add_option("--points", flags.points, "Correspondence JSON");
  calibrate->callback([&] { action = [&] { pl::cmd_calibrate(to_options(flags)); }; });

  auto* preprocess = app.add_subcommand("preprocess", "Remove ghosts, track and smooth 2D poses per camera");
  common(preprocess);
  preprocess->add_option("--calibration", flags.calibration, "Calibration JSON");
  preprocess->add_option("--detections", flags.detections, "Detections JSONL file or directory");
  preprocess->callback([&] { action = [&] { pl::cmd_preprocess(to_options(flags)); }; });

  auto* track = app.add_subcommand("track", "Localize, fuse and track people on the floor");
  common(track);
  track->add_option("--calibration", flags.calibration, "Calibration JSON");
  track->add_option("--detections", flags.detections, "Detections JSONL file or directory");
  track->add_option("--tracker", flags.tracker, "kalman or hungarian-baseline")
      ->check(CLI::IsMember({"kalman", "hungarian-baseline"}));
  track->callback([&] { action = [&] { pl::cmd_track(to_options(flags)); }; });

  auto* evaluate = app.add_subcommand("evaluate", "Score tracks against ground truth");
  common(evaluate);
  evaluate->add_option("--gt", flags.gt, "Ground-truth JSONL");
  evaluate->add_option("--tracks", flags.tracks, "Tracks JSONL");
  evaluate->callback([&] {
    action = [&] {
      const auto report = pl::cmd_evaluate(to_options(flags));
      std::cout << mvtrack::io::report_table(report);
    };
  });

  auto* analyze = app.add_subcommand("analyze", "Correlate camera-installation factors with errors");
  common(analyze);
  analyze->add_option("--calibration", flags.calibration, "Calibration JSON");
  analyze->add_option("--detections", flags.detections, "Detections JSONL file or directory");
  analyze->add_option("--gt", flags.gt, "Ground-truth JSONL");
  analyze->callback([&] { action = [&] { pl::cmd_analyze(to_options(flags)); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", e.what());
    return kExitValidation;
  }

  try {
    if (action) action();
  } catch (const mvtrack::ValidationError& e) {
    report_error(e.kind(), e.what(), e.file(), e.line());
    return kExitValidation;
  } catch (const mvtrack::Error& e) {
    report_error(e.kind(), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    report_error("RuntimeError", e.what());
    return kExitRuntime;
  }
  return 0;
}
