#include "mvtrack/io.hpp"

#include "mvtrack/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mvtrack::io {
namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(std::string("field '") + key + "' must be finite");
  return x;
}

double number_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

long long integer(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) throw ValidationError(std::string("field '") + key + "' must be an integer");
  return v.get<long long>();
}

std::string text(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

bool boolean(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return v.get<int>() == 1;
  throw ValidationError(std::string("field '") + key + "' must be a boolean");
}

Vec2 pair(const Json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ValidationError(what + " must be a [x, y] pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

Json pair_json(const Vec2& p) { return Json::array({p.x(), p.y()}); }

std::string id_text(const Json& v, const char* key) {
  // Identifiers may be written as strings or integers.
  const Json& f = field(v, key);
  if (f.is_string()) return f.get<std::string>();
  if (f.is_number_integer()) return std::to_string(f.get<long long>());
  throw ValidationError(std::string("field '") + key + "' must be a string or integer");
}

std::string format_x(double x) {
  std::ostringstream os;
  os << std::setprecision(15) << x;
  return os.str();
}

}  // namespace

Json to_json(const PoseDetection& d) {
  Json j;
  j["camera_id"] = d.camera_id;
  j["t"] = d.t;
  Json kps = Json::array();
  for (const auto& k : d.pose.keypoints) kps.push_back(Json::array({k.u, k.v, k.confidence, k.visible ? 1 : 0}));
  j["keypoints"] = std::move(kps);
  j["bbox"] = Json::array({d.bbox.u_min, d.bbox.v_min, d.bbox.side});
  if (d.orientation_cam_deg) j["orientation_cam_deg"] = *d.orientation_cam_deg;
  return j;
}

PoseDetection detection_from_json(const Json& j) {
  PoseDetection d;
  d.camera_id = id_text(j, "camera_id");
  d.t = integer(j, "t");
  if (d.t < 0) throw ValidationError("field 't' must be non-negative");
  const Json& kps = field(j, "keypoints");
  if (!kps.is_array() || kps.size() != kNumKeypoints)
    throw ValidationError("field 'keypoints' must hold exactly 17 entries");
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const Json& k = kps[i];
    if (!k.is_array() || k.size() != 4) throw ValidationError("keypoint " + std::to_string(i) + " must be [u, v, conf, vis]");
    for (std::size_t c = 0; c < 4; ++c)
      if (!k[c].is_number() && !k[c].is_boolean())
        throw ValidationError("keypoint " + std::to_string(i) + " has a non-numeric entry");
    Keypoint& kp = d.pose[i];
    kp.u = k[0].get<double>();
    kp.v = k[1].get<double>();
    kp.confidence = k[2].get<double>();
    kp.visible = k[3].is_boolean() ? k[3].get<bool>() : k[3].get<double>() != 0.0;
  }
  if (!validate_pose(d.pose)) throw ValidationError("keypoint confidence outside [0,1]");
  const Json& b = field(j, "bbox");
  if (!b.is_array() || b.size() != 3) throw ValidationError("field 'bbox' must be [u_min, v_min, side]");
  d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>()};
  if (j.contains("orientation_cam_deg") && !j["orientation_cam_deg"].is_null())
    d.orientation_cam_deg = number(j, "orientation_cam_deg");
  return d;
}

Json to_json(const GroundTruthRecord& g) {
  Json j;
  j["t"] = g.t;
  j["person_id"] = g.person_id;
  j["x"] = g.location.x();
  j["y"] = g.location.y();
  j["orientation_deg"] = g.orientation_deg;
  if (g.area_id) j["area_id"] = *g.area_id;
  return j;
}

GroundTruthRecord gt_from_json(const Json& j) {
  GroundTruthRecord g;
  g.t = integer(j, "t");
  g.person_id = id_text(j, "person_id");
  g.location = {number(j, "x"), number(j, "y")};
  g.orientation_deg = number(j, "orientation_deg");
  if (!(g.orientation_deg >= 0.0 && g.orientation_deg < 360.0))
    throw ValidationError("field 'orientation_deg' must lie in [0,360)");
  if (j.contains("area_id") && !j["area_id"].is_null()) g.area_id = id_text(j, "area_id");
  return g;
}

Json to_json(int track_id, const TrackState& s) {
  Json j;
  j["track_id"] = track_id;
  j["t"] = s.t;
  j["x"] = s.position.x();
  j["y"] = s.position.y();
  j["o_deg"] = vector_to_heading(s.orientation());
  j["observed"] = s.observed;
  return j;
}

Json to_json(const geometry::CameraModel& cam) {
  Json j;
  j["camera_id"] = cam.camera_id;
  j["position"] = pair_json(cam.position);
  j["mount_height"] = cam.mount_height;
  j["yaw_deg"] = cam.yaw_deg;
  j["hfov_deg"] = cam.hfov_deg;
  j["vfov_deg"] = cam.vfov_deg;
  j["image_size"] = Json::array({cam.image_size.width, cam.image_size.height});
  j["max_range"] = cam.max_range;
  Json h = Json::array();
  for (int r = 0; r < 3; ++r) h.push_back(Json::array({cam.homography.m(r, 0), cam.homography.m(r, 1), cam.homography.m(r, 2)}));
  j["homography"] = std::move(h);
  return j;
}

namespace {

geometry::CameraModel camera_meta_from_json(const Json& j) {
  geometry::CameraModel cam;
  cam.camera_id = id_text(j, "camera_id");
  cam.position = j.contains("position") ? pair(j["position"], "position") : Vec2::Zero();
  cam.mount_height = number_or(j, "mount_height", 0.0);
  cam.yaw_deg = number_or(j, "yaw_deg", 0.0);
  cam.hfov_deg = number_or(j, "hfov_deg", 60.0);
  cam.vfov_deg = number_or(j, "vfov_deg", 45.0);
  if (j.contains("image_size")) {
    const Json& s = j["image_size"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer())
      throw ValidationError("image_size must be [width, height]");
    cam.image_size = {s[0].get<int>(), s[1].get<int>()};
  } else {
    cam.image_size = {1280, 720};
  }
  cam.max_range = number_or(j, "max_range", 0.0);
  return cam;
}

}  // namespace

geometry::CameraModel camera_from_json(const Json& j) {
  geometry::CameraModel cam = camera_meta_from_json(j);
  const Json& h = field(j, "homography");
  if (!h.is_array() || h.size() != 3) throw ValidationError("homography must be a 3x3 array");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    if (!h[r].is_array() || h[r].size() != 3) throw ValidationError("homography must be a 3x3 array");
    for (int c = 0; c < 3; ++c) {
      if (!h[r][c].is_number()) throw ValidationError("homography entries must be numbers");
      m(r, c) = h[r][c].get<double>();
    }
  }
  try {
    cam.homography = geometry::Homography::from_matrix(m);
  } catch (const DegenerateConfiguration& e) {
    throw ValidationError("camera " + cam.camera_id + ": " + e.what());
  }
  cam.validate();
  return cam;
}

Json to_json(const sim::NoiseEvent& e) {
  Json j;
  j["t"] = e.t;
  j["camera_id"] = e.camera_id;
  j["person_id"] = e.person_id;
  j["kind"] = e.kind;
  j["value"] = e.value;
  return j;
}

sim::NoiseEvent noise_event_from_json(const Json& j) {
  return {integer(j, "t"), id_text(j, "camera_id"), id_text(j, "person_id"), text(j, "kind"), number(j, "value")};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file", path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << content;
  if (!out) throw Error("IoError", "failed writing " + path.string());
}

Json read_json(const fs::path& path) {
  const std::string content = read_text(path);
  try {
    return Json::parse(content);
  } catch (const Json::parse_error& e) {
    // Byte offset to a line number.
    const auto upto = std::min<std::size_t>(e.byte, content.size());
    const long line = 1 + static_cast<long>(std::count(content.begin(), content.begin() + static_cast<long>(upto), '\n'));
    throw ValidationError(std::string("malformed JSON: ") + e.what(), path.string(), line);
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string to_jsonl(std::span<const Json> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::vector<PoseDetection> read_detections(const fs::path& path) {
  return read_jsonl<PoseDetection>(path, detection_from_json);
}

std::vector<PoseDetection> read_detections_any(const fs::path& path) {
  if (!fs::is_directory(path)) return read_detections(path);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<PoseDetection> out;
  for (const auto& f : files) {
    auto part = read_detections(f);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

void write_detections(const fs::path& path, std::span<const PoseDetection> detections) {
  std::vector<Json> rows;
  rows.reserve(detections.size());
  for (const auto& d : detections) rows.push_back(to_json(d));
  write_text(path, to_jsonl(rows));
}

std::vector<GroundTruthRecord> read_ground_truth(const fs::path& path) {
  return read_jsonl<GroundTruthRecord>(path, gt_from_json);
}

void write_ground_truth(const fs::path& path, std::span<const GroundTruthRecord> gt) {
  std::vector<Json> rows;
  rows.reserve(gt.size());
  for (const auto& g : gt) rows.push_back(to_json(g));
  write_text(path, to_jsonl(rows));
}

std::vector<Track> read_tracks(const fs::path& path) {
  struct Row {
    int id;
    TrackState s;
  };
  const auto rows = read_jsonl<Row>(path, [](const Json& j) {
    Row r;
    const long long id = integer(j, "track_id");
    r.id = static_cast<int>(id);
    r.s.t = integer(j, "t");
    r.s.position = {number(j, "x"), number(j, "y")};
    r.s.set_orientation(heading_to_vector(number(j, "o_deg")));
    r.s.observed = boolean(j, "observed");
    return r;
  });
  std::map<int, Track> by_id;
  for (const auto& r : rows) {
    Track& tr = by_id[r.id];
    tr.track_id = r.id;
    tr.status = TrackStatus::Finished;
    tr.states.push_back(r.s);
  }
  std::vector<Track> out;
  for (auto& [id, tr] : by_id) {
    std::stable_sort(tr.states.begin(), tr.states.end(), [](const TrackState& a, const TrackState& b) { return a.t < b.t; });
    for (std::size_t k = 1; k < tr.states.size(); ++k)
      if (tr.states[k].t == tr.states[k - 1].t)
        throw DuplicateId("track " + std::to_string(id) + " has two states at frame " + std::to_string(tr.states[k].t));
    out.push_back(std::move(tr));
  }
  return out;
}

void write_tracks(const fs::path& path, std::span<const Track> tracks) {
  std::vector<Json> rows;
  for (const auto& tr : tracks)
    for (const auto& s : tr.states) rows.push_back(to_json(tr.track_id, s));
  write_text(path, to_jsonl(rows));
}

std::vector<geometry::CameraModel> read_calibration(const fs::path& path) {
  const Json j = read_json(path);
  const Json& arr = j.is_object() && j.contains("cameras") ? j["cameras"] : j;
  if (!arr.is_array()) throw ValidationError("calibration must be an array of cameras", path.string());
  std::vector<geometry::CameraModel> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      out.push_back(camera_from_json(arr[i]));
    } catch (const ValidationError& e) {
      throw ValidationError("camera entry " + std::to_string(i) + ": " + e.what(), path.string());
    }
  }
  return out;
}

void write_calibration(const fs::path& path, std::span<const geometry::CameraModel> cameras) {
  Json arr = Json::array();
  for (const auto& c : cameras) arr.push_back(to_json(c));
  write_json(path, arr);
}

std::vector<sim::NoiseEvent> read_noise_ledger(const fs::path& path) {
  return read_jsonl<sim::NoiseEvent>(path, noise_event_from_json);
}

void write_noise_ledger(const fs::path& path, std::span<const sim::NoiseEvent> ledger) {
  std::vector<Json> rows;
  rows.reserve(ledger.size());
  for (const auto& e : ledger) rows.push_back(to_json(e));
  write_text(path, to_jsonl(rows));
}

std::vector<CameraPoints> read_points(const fs::path& path) {
  const Json j = read_json(path);
  const Json& arr = j.is_object() && j.contains("cameras") ? j["cameras"] : j;
  if (!arr.is_array()) throw ValidationError("points file must be an array of cameras", path.string());
  std::vector<CameraPoints> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      CameraPoints p;
      p.meta = camera_meta_from_json(arr[i]);
      const Json& px = field(arr[i], "pixel_points");
      const Json& wd = field(arr[i], "world_points");
      if (!px.is_array() || px.size() != 4 || !wd.is_array() || wd.size() != 4)
        throw ValidationError("camera " + p.meta.camera_id + ": exactly 4 pixel and 4 world points are required");
      for (std::size_t k = 0; k < 4; ++k) {
        p.pixel_points[k] = pair(px[k], "pixel point");
        p.world_points[k] = pair(wd[k], "world point");
      }
      out.push_back(std::move(p));
    } catch (const ValidationError& e) {
      throw ValidationError("camera entry " + std::to_string(i) + ": " + e.what(), path.string());
    }
  }
  return out;
}

Json to_json(const CameraPoints& p) {
  Json j = to_json(p.meta);
  j.erase("homography");
  Json px = Json::array(), wd = Json::array();
  for (std::size_t k = 0; k < 4; ++k) {
    px.push_back(pair_json(p.pixel_points[k]));
    wd.push_back(pair_json(p.world_points[k]));
  }
  j["pixel_points"] = std::move(px);
  j["world_points"] = std::move(wd);
  return j;
}

sim::Scenario scenario_from_json(const Json& j) {
  sim::Scenario s;
  if (j.contains("site")) {
    s.site.width = number(j["site"], "width");
    s.site.height = number(j["site"], "height");
  }
  if (j.contains("duration")) s.duration = integer(j, "duration");
  if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(integer(j, "seed"));
  for (const auto& pj : field(j, "persons")) {
    sim::PersonSpec p;
    p.person_id = id_text(pj, "person_id");
    p.speed = number_or(pj, "speed", 1.0);
    if (pj.contains("start_t")) p.start_t = integer(pj, "start_t");
    if (pj.contains("area_id")) p.area_id = id_text(pj, "area_id");
    for (const auto& w : field(pj, "waypoints")) {
      sim::PathNode node;
      if (w.is_array()) {
        node.point = pair(w, "waypoint");
      } else {
        node.point = {number(w, "x"), number(w, "y")};
        if (w.contains("hold_deg"))
          for (const auto& h : w["hold_deg"]) {
            if (!h.is_number()) throw ValidationError("hold_deg entries must be numbers");
            node.hold_deg.push_back(h.get<double>());
          }
      }
      p.waypoints.push_back(std::move(node));
    }
    s.persons.push_back(std::move(p));
  }
  if (j.contains("cameras"))
    for (const auto& cj : j["cameras"]) {
      sim::CameraSpec c;
      c.camera_id = id_text(cj, "camera_id");
      c.position = pair(field(cj, "position"), "position");
      c.mount_height = number_or(cj, "mount_height", c.mount_height);
      c.yaw_deg = number_or(cj, "yaw_deg", c.yaw_deg);
      c.pitch_deg = number_or(cj, "pitch_deg", c.pitch_deg);
      if (cj.contains("image_size")) {
        const Json& sz = cj["image_size"];
        if (!sz.is_array() || sz.size() != 2) throw ValidationError("image_size must be [width, height]");
        c.image_size = {sz[0].get<int>(), sz[1].get<int>()};
      }
      c.hfov_deg = number_or(cj, "hfov_deg", c.hfov_deg);
      c.max_range = number_or(cj, "max_range", c.max_range);
      s.cameras.push_back(std::move(c));
    }
  if (j.contains("noise")) {
    const Json& n = j["noise"];
    s.noise.keypoint_sigma_px = number_or(n, "keypoint_sigma_px", 0.0);
    s.noise.fn_base_prob = number_or(n, "fn_base_prob", 0.0);
    s.noise.fn_distance_slope = number_or(n, "fn_distance_slope", 0.0);
    s.noise.flip_prob = number_or(n, "flip_prob", 0.0);
    s.noise.ghost_count = n.contains("ghost_count") ? static_cast<int>(integer(n, "ghost_count")) : 0;
    s.noise.orientation_sigma_deg = number_or(n, "orientation_sigma_deg", 0.0);
    s.noise.loc_error_per_meter = number_or(n, "loc_error_per_meter", 0.0);
    s.noise.loc_error_sigma = number_or(n, "loc_error_sigma", 0.0);
    if (n.contains("localization_bias"))
      for (const auto& [cam, v] : n["localization_bias"].items()) s.noise.localization_bias[cam] = pair(v, "bias");
  }
  return s;
}

Json to_json(const sim::Scenario& s) {
  Json j;
  j["site"] = {{"width", s.site.width}, {"height", s.site.height}};
  j["duration"] = s.duration;
  j["seed"] = s.seed;
  Json persons = Json::array();
  for (const auto& p : s.persons) {
    Json pj;
    pj["person_id"] = p.person_id;
    pj["speed"] = p.speed;
    pj["start_t"] = p.start_t;
    if (p.area_id) pj["area_id"] = *p.area_id;
    Json wps = Json::array();
    for (const auto& w : p.waypoints) {
      if (w.hold_deg.empty()) {
        wps.push_back(pair_json(w.point));
      } else {
        Json wj;
        wj["x"] = w.point.x();
        wj["y"] = w.point.y();
        wj["hold_deg"] = w.hold_deg;
        wps.push_back(std::move(wj));
      }
    }
    pj["waypoints"] = std::move(wps);
    persons.push_back(std::move(pj));
  }
  j["persons"] = std::move(persons);
  Json cams = Json::array();
  for (const auto& c : s.cameras) {
    Json cj;
    cj["camera_id"] = c.camera_id;
    cj["position"] = pair_json(c.position);
    cj["mount_height"] = c.mount_height;
    cj["yaw_deg"] = c.yaw_deg;
    cj["pitch_deg"] = c.pitch_deg;
    cj["image_size"] = Json::array({c.image_size.width, c.image_size.height});
    cj["hfov_deg"] = c.hfov_deg;
    cj["max_range"] = c.max_range;
    cams.push_back(std::move(cj));
  }
  j["cameras"] = std::move(cams);
  Json n;
  n["keypoint_sigma_px"] = s.noise.keypoint_sigma_px;
  n["fn_base_prob"] = s.noise.fn_base_prob;
  n["fn_distance_slope"] = s.noise.fn_distance_slope;
  n["flip_prob"] = s.noise.flip_prob;
  n["ghost_count"] = s.noise.ghost_count;
  n["orientation_sigma_deg"] = s.noise.orientation_sigma_deg;
  n["loc_error_per_meter"] = s.noise.loc_error_per_meter;
  n["loc_error_sigma"] = s.noise.loc_error_sigma;
  Json bias = Json::object();
  for (const auto& [cam, v] : s.noise.localization_bias) bias[cam] = pair_json(v);
  n["localization_bias"] = std::move(bias);
  j["noise"] = std::move(n);
  return j;
}

Json to_json(const metrics::MotSummary& s) {
  Json j;
  j["frames"] = s.frames;
  j["gt"] = s.gt;
  j["matches"] = s.matches;
  j["fn"] = s.fn;
  j["fp"] = s.fp;
  j["ids"] = s.ids;
  j["frag"] = s.frag;
  j["mota"] = s.mota;
  j["motp"] = s.motp;
  j["idf1"] = s.idf1;
  j["idtp"] = s.idtp;
  j["idfp"] = s.idfp;
  j["idfn"] = s.idfn;
  j["recall"] = s.recall;
  j["precision"] = s.precision;
  j["idsr"] = s.idsr;
  j["fpr"] = s.fpr;
  j["fnr"] = s.fnr;
  j["mt"] = s.mt;
  j["mt_ratio"] = s.mt_ratio;
  j["ml"] = s.ml;
  j["ml_ratio"] = s.ml_ratio;
  j["num_gt_ids"] = s.num_gt_ids;
  j["num_hyp_ids"] = s.num_hyp_ids;
  return j;
}

Json to_json(const metrics::EvalReport& r) {
  Json j;
  j["overall"] = to_json(r.mot);
  if (r.orientation) {
    Json o;
    o["count"] = r.orientation->count;
    o["mae_deg"] = r.orientation->mae_deg;
    Json acc = Json::object();
    for (const auto& [x, v] : r.orientation->acc_at) acc[format_x(x)] = v;
    o["acc_at"] = std::move(acc);
    j["orientation"] = std::move(o);
  } else {
    j["orientation"] = nullptr;
  }
  Json areas = Json::object();
  for (const auto& [id, s] : r.per_area) areas[id] = to_json(s);
  j["per_area"] = std::move(areas);
  return j;
}

std::string report_table(const metrics::EvalReport& r) {
  std::ostringstream os;
  os << std::fixed;
  auto row = [&](const std::string& name, const metrics::MotSummary& s) {
    os << std::left << std::setw(12) << name << std::right << std::setprecision(3) << std::setw(8) << s.mota
       << std::setw(8) << s.motp << std::setw(8) << s.idf1 << std::setw(6) << s.mt << std::setw(6) << s.ml
       << std::setw(8) << s.fpr << std::setw(8) << s.fnr << std::setw(8) << s.recall << std::setw(8) << s.precision
       << std::setw(6) << s.ids << std::setw(8) << s.idsr << std::setw(6) << s.frag << '\n';
  };
  os << std::left << std::setw(12) << "area" << std::right << std::setw(8) << "MOTA" << std::setw(8) << "MOTP"
     << std::setw(8) << "IDF1" << std::setw(6) << "MT" << std::setw(6) << "ML" << std::setw(8) << "FPR" << std::setw(8)
     << "FNR" << std::setw(8) << "Rcll" << std::setw(8) << "Prcn" << std::setw(6) << "IDS" << std::setw(8) << "IDSR"
     << std::setw(6) << "Frag" << '\n';
  for (const auto& [id, s] : r.per_area) row(id, s);
  row("overall", r.mot);
  if (r.orientation) {
    os << '\n' << std::left << std::setw(12) << "orientation" << std::right << std::setw(8) << "MAE";
    for (const auto& [x, v] : r.orientation->acc_at) os << std::setw(10) << ("Acc-" + format_x(x));
    os << '\n' << std::left << std::setw(12) << "" << std::right << std::setprecision(2) << std::setw(8)
       << r.orientation->mae_deg;
    os << std::setprecision(3);
    for (const auto& [x, v] : r.orientation->acc_at) os << std::setw(10) << v;
    os << '\n';
  }
  return os.str();
}

std::string factors_csv(std::span<const metrics::FactorSample> samples) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "camera_id,t,person_id,distance,facing_angle_deg,h_norm,v_norm,loc_err_m,ori_err_deg\n";
  for (const auto& s : samples) {
    os << s.camera_id << ',' << s.t << ',' << s.person_id << ',' << s.factors.distance << ','
       << s.factors.facing_angle_deg << ',' << s.factors.h_norm << ',' << s.factors.v_norm << ',' << s.loc_err_m << ',';
    if (s.ori_err_deg) os << *s.ori_err_deg;
    os << '\n';
  }
  return os.str();
}

Json to_json(std::span<const metrics::FactorCorrelation> correlations) {
  Json arr = Json::array();
  for (const auto& c : correlations) {
    Json j;
    j["factor"] = c.factor;
    j["localization"] = {{"r", c.localization.r}, {"p", c.localization.p}, {"n", c.localization.n}};
    if (c.orientation)
      j["orientation"] = {{"r", c.orientation->r}, {"p", c.orientation->p}, {"n", c.orientation->n}};
    else
      j["orientation"] = nullptr;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace mvtrack::io
