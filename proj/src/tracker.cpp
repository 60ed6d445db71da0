#include "mvtrack/tracker.hpp"

#include "mvtrack/assignment.hpp"
#include "mvtrack/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <string>

namespace mvtrack::tracker {

void TrackerConfig::validate() const {
  if (!(gate > 0.0)) throw ValidationError("tracker gate must be positive");
  if (max_coast < 0) throw ValidationError("tracker max_coast must be non-negative");
  if (!(w_motion >= 0.0)) throw ValidationError("tracker w_motion must be non-negative");
  if (!(dt > 0.0)) throw ValidationError("tracker dt must be positive");
  if (!(process_accel_sigma > 0.0) || !(measurement_sigma > 0.0) || !(velocity_sigma > 0.0))
    throw ValidationError("tracker sigmas must be positive");
  if (!(orientation_blend >= 0.0 && orientation_blend <= 1.0))
    throw ValidationError("tracker orientation_blend must lie in [0,1]");
  if (!(min_speed >= 0.0)) throw ValidationError("tracker min_speed must be non-negative");
}

filtering::LinearCVModel TrackerConfig::model() const { return {2, dt, process_accel_sigma, measurement_sigma}; }

Vec2 advance_orientation(const Vec2& o, const Vec2& velocity, const Vec2& angular_velocity, const TrackerConfig& cfg) {
  Vec2 motion = Vec2::Zero();
  if (cfg.orientation_mode == OrientationMode::Literal) {
    motion = velocity;
  } else if (velocity.norm() > cfg.min_speed) {
    motion = velocity.normalized();
  }
  const Vec2 next = o + cfg.w_motion * motion + cfg.dt * angular_velocity;
  if (next.norm() <= 1e-12) return o;
  return next.normalized();
}

Vec2 slerp(const Vec2& from, const Vec2& to, double factor) {
  const double a = std::atan2(from.y(), from.x());
  double delta = std::atan2(to.y(), to.x()) - a;
  while (delta >= std::numbers::pi) delta -= 2.0 * std::numbers::pi;
  while (delta < -std::numbers::pi) delta += 2.0 * std::numbers::pi;
  const double r = a + factor * delta;
  return {std::cos(r), std::sin(r)};
}

struct KalmanTracker::Live {
  int id = 0;
  Frame first_t = 0;
  filtering::TrackFilter filter;
  int coast = 0;
  bool orientation_known = false;
  // Per step, filtered orientation and its rate.
  std::vector<Vec2> orientation;
  std::vector<Vec2> angular_velocity;
};

KalmanTracker::KalmanTracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }
KalmanTracker::~KalmanTracker() = default;
KalmanTracker::KalmanTracker(KalmanTracker&&) noexcept = default;
KalmanTracker& KalmanTracker::operator=(KalmanTracker&&) noexcept = default;

void KalmanTracker::step(Frame t, std::span<const WorldObservation> observations) {
  if (last_t_ && t != *last_t_ + 1)
    throw NonMonotonicTime("frame " + std::to_string(t) + " does not follow " + std::to_string(*last_t_));
  for (const auto& o : observations)
    if (o.t != t) throw NonMonotonicTime("observation at frame " + std::to_string(o.t) + " passed to frame " +
                                         std::to_string(t));
  last_t_ = t;

  // Predict.
  std::vector<Vec2> predicted(live_.size());
  for (std::size_t i = 0; i < live_.size(); ++i) {
    Live& tr = live_[i];
    const Vec2 vel = tr.filter.current().velocity();
    tr.filter.predict();
    predicted[i] = tr.filter.current().position();
    Vec2 o = tr.orientation.back();
    if (tr.orientation_known) o = advance_orientation(o, vel, tr.angular_velocity.back(), cfg_);
    tr.orientation.push_back(o);
    tr.angular_velocity.push_back(tr.angular_velocity.back());
  }

  // Associate.
  assignment::CostMatrix cost(live_.size(), observations.size());
  for (std::size_t i = 0; i < live_.size(); ++i)
    for (std::size_t j = 0; j < observations.size(); ++j) {
      const double d = (predicted[i] - observations[j].location).norm();
      if (d <= cfg_.gate) cost.set(i, j, d);
    }
  const auto result = assignment::solve(cost);

  // Update.
  std::vector<char> matched(live_.size(), 0);
  for (const auto& [i, j] : result.pairs) {
    Live& tr = live_[i];
    const WorldObservation& obs = observations[j];
    matched[i] = 1;
    tr.coast = 0;
    tr.filter.update(obs.location);
    matches_.push_back({t, tr.id, predicted[i], obs.location});

    const Vec2 prev = tr.orientation[tr.orientation.size() - 2];
    Vec2& o = tr.orientation.back();
    if (obs.orientation) {
      if (tr.orientation_known) {
        o = slerp(o, obs.orientation->normalized(), cfg_.orientation_blend);
        tr.angular_velocity.back() = (o - prev) / cfg_.dt;
      } else {
        o = obs.orientation->normalized();
        tr.orientation_known = true;
      }
    } else if (tr.orientation_known) {
      tr.angular_velocity.back() = (o - prev) / cfg_.dt;
    }
  }

  // Retire.
  std::vector<Live> still;
  still.reserve(live_.size());
  for (std::size_t i = 0; i < live_.size(); ++i) {
    if (!matched[i] && ++live_[i].coast > cfg_.max_coast) {
      finished_.push_back(finalize(live_[i]));
      continue;
    }
    still.push_back(std::move(live_[i]));
  }
  live_ = std::move(still);

  // Spawn.
  for (std::size_t j : result.unmatched_cols) {
    const WorldObservation& obs = observations[j];
    Live tr{next_id_++, t, filtering::TrackFilter(cfg_.model(), cfg_.velocity_sigma, cfg_.velocity_init), 0, false,
            {}, {}};
    tr.filter.start(obs.location);
    tr.orientation_known = obs.orientation.has_value();
    tr.orientation.push_back(obs.orientation ? obs.orientation->normalized() : Vec2(0.0, 1.0));
    tr.angular_velocity.push_back(Vec2::Zero());
    live_.push_back(std::move(tr));
  }
}

void KalmanTracker::flush() {
  for (auto& tr : live_) finished_.push_back(finalize(tr));
  live_.clear();
}

std::vector<Track> KalmanTracker::finished() const {
  std::vector<Track> out = finished_;
  std::sort(out.begin(), out.end(), [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
  return out;
}

std::vector<int> KalmanTracker::live_ids() const {
  std::vector<int> ids;
  for (const auto& tr : live_) ids.push_back(tr.id);
  return ids;
}

Track KalmanTracker::finalize(Live& live) const {
  const std::size_t steps = live.filter.steps();
  std::size_t last = 0;
  for (std::size_t k = 0; k < steps; ++k)
    if (live.filter.observed(k)) last = k;
  const auto smoothed = live.filter.smoothed();

  Track track;
  track.track_id = live.id;
  track.status = TrackStatus::Finished;
  for (std::size_t k = 0; k <= last; ++k) {
    const auto& b = smoothed[k];
    Eigen::Matrix4d cov = b.cov;
    track.states.emplace_back(live.first_t + static_cast<Frame>(k), b.position(), b.velocity(), live.orientation[k],
                              live.angular_velocity[k], cov, live.filter.observed(k));
  }
  return track;
}

std::vector<Track> run(std::span<const WorldObservation> observations, const TrackerConfig& cfg) {
  KalmanTracker tracker(cfg);
  std::size_t i = 0;
  while (i < observations.size()) {
    const Frame t = observations[i].t;
    std::size_t j = i;
    while (j < observations.size() && observations[j].t == t) ++j;
    if (j < observations.size() && observations[j].t < t)
      throw NonMonotonicTime("observation stream is not ordered by frame");
    if (i > 0)
      for (Frame gap = observations[i - 1].t + 1; gap < t; ++gap) tracker.step(gap, {});
    tracker.step(t, observations.subspan(i, j - i));
    i = j;
  }
  tracker.flush();
  return tracker.finished();
}

namespace {

struct Chain {
  int id = 0;
  std::vector<Frame> t;
  std::vector<Vec2> loc;
  std::vector<std::optional<Vec2>> orientation;
  std::vector<bool> observed;
};

Track chain_to_track(const Chain& c) {
  Track tr;
  tr.track_id = c.id;
  tr.status = TrackStatus::Finished;
  const std::size_t n = c.t.size();
  Vec2 o(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k)
    if (c.orientation[k]) {
      o = *c.orientation[k];
      break;
    }
  Vec2 prev_o = o;
  for (std::size_t k = 0; k < n; ++k) {
    Vec2 vel = Vec2::Zero();
    if (k > 0)
      vel = c.loc[k] - c.loc[k - 1];
    else if (n > 1)
      vel = c.loc[1] - c.loc[0];
    if (c.orientation[k]) o = c.orientation[k]->normalized();
    const Vec2 odot = k > 0 ? Vec2(o - prev_o) : Vec2(Vec2::Zero());
    tr.states.emplace_back(c.t[k], c.loc[k], vel, o, odot, Eigen::Matrix4d::Zero(), static_cast<bool>(c.observed[k]));
    prev_o = o;
  }
  return tr;
}

}  // namespace

std::vector<Track> baseline_hungarian_run(std::span<const WorldObservation> observations, double gate) {
  if (!(gate > 0.0)) throw ValidationError("baseline gate must be positive");
  std::map<Frame, std::vector<const WorldObservation*>> frames;
  for (const auto& o : observations) frames[o.t].push_back(&o);

  std::vector<Chain> chains;
  int next_id = 1;
  for (const auto& [t, obs] : frames) {
    std::vector<char> used(obs.size(), 0);
    auto link = [&](std::vector<std::size_t> cand, double g, bool bridge) {
      std::vector<std::size_t> cols;
      for (std::size_t j = 0; j < obs.size(); ++j)
        if (!used[j]) cols.push_back(j);
      assignment::CostMatrix cost(cand.size(), cols.size());
      for (std::size_t i = 0; i < cand.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
          const double d = (chains[cand[i]].loc.back() - obs[cols[j]]->location).norm();
          if (d <= g) cost.set(i, j, d);
        }
      for (const auto& [i, j] : assignment::solve(cost).pairs) {
        Chain& c = chains[cand[i]];
        const WorldObservation& o = *obs[cols[j]];
        if (bridge) {
          c.t.push_back(t - 1);
          c.loc.push_back(0.5 * (c.loc.back() + o.location));
          c.orientation.push_back(std::nullopt);
          c.observed.push_back(false);
        }
        c.t.push_back(t);
        c.loc.push_back(o.location);
        c.orientation.push_back(o.orientation);
        c.observed.push_back(true);
        used[cols[j]] = 1;
      }
    };
    std::vector<std::size_t> recent, gapped;
    for (std::size_t i = 0; i < chains.size(); ++i) {
      if (chains[i].t.back() == t - 1) recent.push_back(i);
      if (chains[i].t.back() == t - 2) gapped.push_back(i);
    }
    link(recent, gate, false);
    link(gapped, 2.0 * gate, true);
    for (std::size_t j = 0; j < obs.size(); ++j) {
      if (used[j]) continue;
      chains.push_back(Chain{next_id++, {t}, {obs[j]->location}, {obs[j]->orientation}, {true}});
    }
  }
  std::vector<Track> out;
  out.reserve(chains.size());
  for (const auto& c : chains) out.push_back(chain_to_track(c));
  return out;
}

}  // namespace mvtrack::tracker
