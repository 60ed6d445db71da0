#include "mvtrack/metrics.hpp"

#include "mvtrack/assignment.hpp"
#include "mvtrack/errors.hpp"
#include "mvtrack/fusion.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mvtrack::metrics {

MotAccumulator::MotAccumulator(double gate) : gate_(gate) {
  if (!(gate > 0.0)) throw std::invalid_argument("gate must be positive");
}

void MotAccumulator::accumulate_frame(Frame t, std::span<const GroundTruthRecord> gt, std::span<const HypSample> hyp) {
  {
    std::set<std::string> gt_ids;
    for (const auto& g : gt) {
      if (g.t != t) throw std::invalid_argument("gt record from frame " + std::to_string(g.t) + " given for frame " +
                                                std::to_string(t));
      if (!gt_ids.insert(g.person_id).second)
        throw DuplicateId("person " + g.person_id + " appears twice at frame " + std::to_string(t));
    }
    std::set<int> hyp_ids;
    for (const auto& h : hyp)
      if (!hyp_ids.insert(h.track_id).second)
        throw DuplicateId("track " + std::to_string(h.track_id) + " appears twice at frame " + std::to_string(t));
  }
  ++frames_;
  for (const auto& g : gt) gt_traj_[g.person_id][t] = g.location;
  for (const auto& h : hyp) hyp_traj_[h.track_id][t] = h.location;

  std::vector<std::optional<std::size_t>> gt_to_hyp(gt.size());
  std::vector<char> hyp_used(hyp.size(), 0);

  // Keep last frame's correspondences that are still within the gate.
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto it = last_match_.find(gt[i].person_id);
    if (it == last_match_.end()) continue;
    for (std::size_t j = 0; j < hyp.size(); ++j) {
      if (hyp[j].track_id != it->second || hyp_used[j]) continue;
      if ((gt[i].location - hyp[j].location).norm() <= gate_) {
        gt_to_hyp[i] = j;
        hyp_used[j] = 1;
      }
      break;
    }
  }

  // Gated Hungarian on the rest.
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (!gt_to_hyp[i]) rows.push_back(i);
  for (std::size_t j = 0; j < hyp.size(); ++j)
    if (!hyp_used[j]) cols.push_back(j);
  assignment::CostMatrix cost(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const double d = (gt[rows[a]].location - hyp[cols[b]].location).norm();
      if (d <= gate_) cost.set(a, b, d);
    }
  for (const auto& [a, b] : assignment::solve(cost).pairs) {
    gt_to_hyp[rows[a]] = cols[b];
    hyp_used[cols[b]] = 1;
  }

  for (std::size_t i = 0; i < gt.size(); ++i) {
    Event e;
    e.t = t;
    e.gt_id = gt[i].person_id;
    e.gt_orientation_deg = gt[i].orientation_deg;
    if (!gt_to_hyp[i]) {
      e.kind = EventKind::Miss;
      events_.push_back(std::move(e));
      continue;
    }
    const HypSample& h = hyp[*gt_to_hyp[i]];
    e.kind = EventKind::Match;
    e.hyp_id = h.track_id;
    e.distance = (gt[i].location - h.location).norm();
    e.hyp_orientation_deg = h.orientation_deg;
    const auto it = last_match_.find(gt[i].person_id);
    if (it != last_match_.end() && it->second != h.track_id) {
      e.switched = true;
      e.previous_hyp = it->second;
    }
    last_match_[gt[i].person_id] = h.track_id;
    events_.push_back(std::move(e));
  }
  for (std::size_t j = 0; j < hyp.size(); ++j) {
    if (hyp_used[j]) continue;
    Event e;
    e.t = t;
    e.kind = EventKind::FalsePositive;
    e.hyp_id = hyp[j].track_id;
    e.hyp_orientation_deg = hyp[j].orientation_deg;
    events_.push_back(std::move(e));
  }
}

double max_identity_overlap(const std::vector<std::vector<double>>& idtp) {
  if (idtp.empty() || idtp.front().empty()) return 0.0;
  double top = 0.0;
  for (const auto& row : idtp) top = std::max(top, *std::max_element(row.begin(), row.end()));
  assignment::CostMatrix cost(idtp.size(), idtp.front().size());
  for (std::size_t g = 0; g < idtp.size(); ++g)
    for (std::size_t h = 0; h < idtp[g].size(); ++h) cost.set(g, h, top - idtp[g][h]);
  double total = 0.0;
  for (const auto& [g, h] : assignment::solve(cost).pairs) total += idtp[g][h];
  return total;
}

MotSummary finalize(const MotAccumulator& acc) {
  if (acc.frames() == 0) throw EmptyAccumulator("no frames accumulated");
  MotSummary s;
  s.frames = acc.frames();
  double dist = 0.0;
  std::map<std::string, std::map<Frame, bool>> tracked;
  for (const auto& e : acc.events()) {
    switch (e.kind) {
      case EventKind::Match:
        ++s.matches;
        ++s.gt;
        dist += e.distance;
        if (e.switched) ++s.ids;
        tracked[*e.gt_id][e.t] = true;
        break;
      case EventKind::Miss:
        ++s.fn;
        ++s.gt;
        tracked[*e.gt_id][e.t] = false;
        break;
      case EventKind::FalsePositive:
        ++s.fp;
        break;
    }
  }
  const double gt = static_cast<double>(s.gt);
  s.motp = s.matches > 0 ? dist / static_cast<double>(s.matches) : 0.0;
  s.mota = s.gt > 0 ? 1.0 - static_cast<double>(s.fn + s.fp + s.ids) / gt : 0.0;
  s.recall = s.gt > 0 ? static_cast<double>(s.matches) / gt : 0.0;
  s.precision = s.matches + s.fp > 0 ? static_cast<double>(s.matches) / static_cast<double>(s.matches + s.fp) : 0.0;
  s.idsr = s.recall > 0.0 ? static_cast<double>(s.ids) / s.recall : 0.0;
  s.fpr = static_cast<double>(s.fp) / static_cast<double>(s.frames);
  s.fnr = static_cast<double>(s.fn) / static_cast<double>(s.frames);

  s.num_gt_ids = tracked.size();
  s.num_hyp_ids = acc.hyp_trajectories().size();
  for (const auto& [id, flags] : tracked) {
    std::size_t hit = 0;
    bool seen_tracked = false;
    bool prev = false;
    for (const auto& [t, f] : flags) {
      if (f) {
        ++hit;
        if (seen_tracked && !prev) ++s.frag;
        seen_tracked = true;
      }
      prev = f;
    }
    const double coverage = static_cast<double>(hit) / static_cast<double>(flags.size());
    if (coverage >= 0.8) ++s.mt;
    if (coverage <= 0.2) ++s.ml;
  }
  if (s.num_gt_ids > 0) {
    s.mt_ratio = static_cast<double>(s.mt) / static_cast<double>(s.num_gt_ids);
    s.ml_ratio = static_cast<double>(s.ml) / static_cast<double>(s.num_gt_ids);
  }

  // Identity metrics over whole trajectories.
  const auto& gts = acc.gt_trajectories();
  const auto& hyps = acc.hyp_trajectories();
  double gt_total = 0.0, hyp_total = 0.0;
  for (const auto& [id, tr] : gts) gt_total += static_cast<double>(tr.size());
  for (const auto& [id, tr] : hyps) hyp_total += static_cast<double>(tr.size());
  std::vector<std::vector<double>> idtp;
  for (const auto& [gid, g] : gts) {
    auto& row = idtp.emplace_back();
    for (const auto& [hid, h] : hyps) {
      double n = 0.0;
      for (const auto& [t, loc] : g) {
        const auto it = h.find(t);
        if (it != h.end() && (it->second - loc).norm() <= acc.gate()) n += 1.0;
      }
      row.push_back(n);
    }
  }
  s.idtp = max_identity_overlap(idtp);
  s.idfn = gt_total - s.idtp;
  s.idfp = hyp_total - s.idtp;
  const double denom = 2.0 * s.idtp + s.idfp + s.idfn;
  s.idf1 = denom > 0.0 ? 2.0 * s.idtp / denom : 0.0;
  return s;
}

double angular_error(double pred_deg, double gt_deg) {
  const double d = std::fmod(std::abs(pred_deg - gt_deg), 360.0);
  return std::min(d, 360.0 - d);
}

double accuracy_at(std::span<const double> errors_deg, double x_deg) {
  if (errors_deg.empty()) throw EmptyInput("accuracy of an empty error list");
  const auto hits = std::count_if(errors_deg.begin(), errors_deg.end(), [&](double e) { return e <= x_deg; });
  return static_cast<double>(hits) / static_cast<double>(errors_deg.size());
}

Correlation pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson_r: length mismatch");
  const std::size_t n = xs.size();
  if (n < 3) throw DegenerateVariance("pearson_r needs at least 3 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double scale_x = std::max(1.0, mx * mx) * static_cast<double>(n);
  const double scale_y = std::max(1.0, my * my) * static_cast<double>(n);
  if (sxx <= 1e-24 * scale_x || syy <= 1e-24 * scale_y) throw DegenerateVariance("pearson_r: constant input");

  Correlation c;
  c.n = n;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    const double tstat = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    const boost::math::students_t dist(df);
    c.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(tstat)));
  }
  return c;
}

std::vector<FactorCorrelation> factor_analysis(std::span<const FactorSample> samples) {
  auto factor = [](const geometry::GeometryFactors& f, std::size_t k) {
    switch (k) {
      case 0: return f.distance;
      case 1: return f.facing_angle_deg;
      case 2: return f.h_norm;
      default: return f.v_norm;
    }
  };
  std::vector<FactorCorrelation> out;
  for (std::size_t k = 0; k < kFactorNames.size(); ++k) {
    FactorCorrelation fc;
    fc.factor = std::string(kFactorNames[k]);
    std::vector<double> xs, loc, oxs, ori;
    for (const auto& s : samples) {
      xs.push_back(factor(s.factors, k));
      loc.push_back(s.loc_err_m);
      if (s.ori_err_deg) {
        oxs.push_back(factor(s.factors, k));
        ori.push_back(*s.ori_err_deg);
      }
    }
    fc.localization = pearson_r(xs, loc);
    if (ori.size() >= 3) fc.orientation = pearson_r(oxs, ori);
    out.push_back(std::move(fc));
  }
  return out;
}

void EvalConfig::validate() const {
  if (!(gate > 0.0)) throw ValidationError("evaluation gate must be positive");
  if (!std::is_sorted(accuracy_x.begin(), accuracy_x.end()))
    throw ValidationError("accuracy X-list must be sorted ascending");
  for (double x : accuracy_x)
    if (!(x >= 0.0 && x <= 180.0)) throw ValidationError("accuracy X values must lie in [0,180]");
  for (const auto& a : areas)
    if (!(a.x_min <= a.x_max && a.y_min <= a.y_max)) throw ValidationError("area " + a.id + " has inverted bounds");
}

std::optional<std::string> area_of(const GroundTruthRecord& g, std::span<const Area> areas) {
  if (g.area_id) return g.area_id;
  std::optional<std::string> best;
  for (const auto& a : areas)
    if (a.contains(g.location) && (!best || a.id < *best)) best = a.id;
  return best;
}

namespace {

using GtFrames = std::map<Frame, std::vector<GroundTruthRecord>>;
using HypFrames = std::map<Frame, std::vector<HypSample>>;

MotAccumulator accumulate(const GtFrames& gt, const HypFrames& hyp, double gate) {
  std::set<Frame> frames;
  for (const auto& [t, v] : gt) frames.insert(t);
  for (const auto& [t, v] : hyp) frames.insert(t);
  MotAccumulator acc(gate);
  static const std::vector<GroundTruthRecord> kNoGt;
  static const std::vector<HypSample> kNoHyp;
  for (Frame t : frames) {
    const auto g = gt.find(t);
    const auto h = hyp.find(t);
    acc.accumulate_frame(t, g == gt.end() ? kNoGt : g->second, h == hyp.end() ? kNoHyp : h->second);
  }
  return acc;
}

}  // namespace

EvalReport evaluate(std::span<const GroundTruthRecord> gt, std::span<const Track> tracks, const EvalConfig& cfg) {
  cfg.validate();
  GtFrames gt_frames;
  for (const auto& g : gt) gt_frames[g.t].push_back(g);
  HypFrames hyp_frames;
  for (const auto& tr : tracks)
    for (const auto& s : tr.states) {
      if (!s.observed && !cfg.count_coasted) continue;
      hyp_frames[s.t].push_back({tr.track_id, s.position, vector_to_heading(s.orientation()), s.observed});
    }

  EvalReport report;
  const MotAccumulator acc = accumulate(gt_frames, hyp_frames, cfg.gate);
  report.mot = finalize(acc);

  std::vector<double> errors;
  for (const auto& e : acc.events())
    if (e.kind == EventKind::Match && e.gt_orientation_deg && e.hyp_orientation_deg)
      errors.push_back(angular_error(*e.hyp_orientation_deg, *e.gt_orientation_deg));
  if (!errors.empty()) {
    OrientationSummary o;
    o.count = errors.size();
    double sum = 0.0;
    for (double e : errors) sum += e;
    o.mae_deg = sum / static_cast<double>(errors.size());
    for (double x : cfg.accuracy_x) o.acc_at[x] = accuracy_at(errors, x);
    report.orientation = o;
  }

  std::set<std::string> area_ids;
  for (const auto& a : cfg.areas) area_ids.insert(a.id);
  for (const auto& g : gt)
    if (const auto a = area_of(g, cfg.areas)) area_ids.insert(*a);
  for (const auto& id : area_ids) {
    const Area* rect = nullptr;
    for (const auto& a : cfg.areas)
      if (a.id == id) rect = &a;
    GtFrames sub_gt;
    for (const auto& g : gt)
      if (area_of(g, cfg.areas) == id) sub_gt[g.t].push_back(g);
    HypFrames sub_hyp;
    for (const auto& [t, hs] : hyp_frames)
      for (const auto& h : hs) {
        bool keep = false;
        if (rect) {
          keep = rect->contains(h.location);
        } else if (const auto it = sub_gt.find(t); it != sub_gt.end()) {
          for (const auto& g : it->second) keep = keep || (g.location - h.location).norm() <= cfg.gate;
        }
        if (keep) sub_hyp[t].push_back(h);
      }
    if (sub_gt.empty() && sub_hyp.empty()) continue;
    report.per_area[id] = finalize(accumulate(sub_gt, sub_hyp, cfg.gate));
  }
  return report;
}

std::vector<FactorSample> collect_factor_samples(std::span<const PoseDetection> detections,
                                                 std::span<const geometry::CameraModel> cameras,
                                                 std::span<const GroundTruthRecord> gt, double gate) {
  std::map<std::string, const geometry::CameraModel*> cams;
  for (const auto& c : cameras) cams[c.camera_id] = &c;
  std::map<Frame, std::vector<const GroundTruthRecord*>> gt_at;
  for (const auto& g : gt) gt_at[g.t].push_back(&g);

  struct Placed {
    const PoseDetection* det;
    fusion::ViewSample sample;
    Vec2 foot;
  };
  std::map<std::pair<std::string, Frame>, std::vector<Placed>> groups;
  for (const auto& d : detections) {
    const auto it = cams.find(d.camera_id);
    if (it == cams.end()) throw ValidationError("detection references unknown camera " + d.camera_id);
    try {
      groups[{d.camera_id, d.t}].push_back({&d, fusion::localize(d, *it->second), geometry::foot_point(d.pose)});
    } catch (const NoFeetVisible&) {
    } catch (const HorizonPoint&) {
    }
  }

  std::vector<FactorSample> out;
  for (const auto& [key, placed] : groups) {
    const auto git = gt_at.find(key.second);
    if (git == gt_at.end()) continue;
    const auto& people = git->second;
    assignment::CostMatrix cost(placed.size(), people.size());
    for (std::size_t i = 0; i < placed.size(); ++i)
      for (std::size_t j = 0; j < people.size(); ++j) {
        const double d = (placed[i].sample.location - people[j]->location).norm();
        if (d <= gate) cost.set(i, j, d);
      }
    const geometry::CameraModel& cam = *cams.at(key.first);
    for (const auto& [i, j] : assignment::solve(cost).pairs) {
      const GroundTruthRecord& g = *people[j];
      FactorSample s;
      s.camera_id = key.first;
      s.t = key.second;
      s.person_id = g.person_id;
      s.factors = geometry::geometry_factors(cam, g.location, heading_to_vector(g.orientation_deg), placed[i].foot);
      s.loc_err_m = cost.cost(i, j);
      if (placed[i].sample.orientation)
        s.ori_err_deg = angular_error(vector_to_heading(*placed[i].sample.orientation), g.orientation_deg);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace mvtrack::metrics
