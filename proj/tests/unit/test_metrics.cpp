#include <doctest.h>

#include "oracles.hpp"

#include "mvtrack/errors.hpp"
#include "mvtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

using namespace mvtrack;
using namespace mvtrack::metrics;

namespace {

GroundTruthRecord gt(Frame t, const std::string& id, double x, double y, double deg = 0.0) {
  GroundTruthRecord g;
  g.t = t;
  g.person_id = id;
  g.location = {x, y};
  g.orientation_deg = deg;
  return g;
}

HypSample hyp(int id, double x, double y) { return {id, Vec2(x, y), std::nullopt, true}; }

/// Frame-indexed input built by hand.
struct Scripted {
  std::map<Frame, std::vector<GroundTruthRecord>> gt;
  std::map<Frame, std::vector<HypSample>> hyp;

  MotAccumulator accumulate(double gate = 1.5) const {
    MotAccumulator acc(gate);
    std::set<Frame> frames;
    for (const auto& [t, v] : gt) frames.insert(t);
    for (const auto& [t, v] : hyp) frames.insert(t);
    for (Frame t : frames) {
      const auto g = gt.count(t) ? gt.at(t) : std::vector<GroundTruthRecord>{};
      const auto h = hyp.count(t) ? hyp.at(t) : std::vector<HypSample>{};
      acc.accumulate_frame(t, g, h);
    }
    return acc;
  }
};

/// IDTP matrix counted directly from the scripted frames.
std::vector<std::vector<double>> count_idtp(const Scripted& s, double gate) {
  std::set<std::string> gids;
  std::set<int> hids;
  for (const auto& [t, v] : s.gt)
    for (const auto& g : v) gids.insert(g.person_id);
  for (const auto& [t, v] : s.hyp)
    for (const auto& h : v) hids.insert(h.track_id);
  std::vector<std::vector<double>> w;
  for (const auto& gid : gids) {
    auto& row = w.emplace_back();
    for (int hid : hids) {
      double n = 0;
      for (const auto& [t, v] : s.gt)
        for (const auto& g : v) {
          if (g.person_id != gid || !s.hyp.count(t)) continue;
          for (const auto& h : s.hyp.at(t))
            if (h.track_id == hid && (h.location - g.location).norm() <= gate) n += 1;
        }
      row.push_back(n);
    }
  }
  return w;
}

double idf1_oracle(const Scripted& s, double gate) {
  double gt_n = 0, hyp_n = 0;
  for (const auto& [t, v] : s.gt) gt_n += static_cast<double>(v.size());
  for (const auto& [t, v] : s.hyp) hyp_n += static_cast<double>(v.size());
  const double tp = oracle::brute_max_overlap(count_idtp(s, gate));
  return 2 * tp / (gt_n + hyp_n);
}

Scripted random_script(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(0, 4), frames(1, 8);
  std::uniform_real_distribution<double> pos(0.0, 6.0), u(0, 1);
  Scripted s;
  const int people = n(rng) + 1, tracks = n(rng) + 1, len = frames(rng);
  for (Frame t = 0; t < len; ++t) {
    for (int k = 0; k < people; ++k)
      if (u(rng) < 0.8) s.gt[t].push_back(gt(t, "g" + std::to_string(k), pos(rng), pos(rng)));
    for (int k = 0; k < tracks; ++k)
      if (u(rng) < 0.8) s.hyp[t].push_back(hyp(10 + k, pos(rng), pos(rng)));
  }
  return s;
}

}  // namespace

TEST_CASE("gate decides match versus miss plus false positive") {
  for (auto [d, match] : {std::pair{1.4, true}, std::pair{1.5, true}, std::pair{1.6, false}}) {
    MotAccumulator acc;
    const std::vector<GroundTruthRecord> g = {gt(0, "a", 0, 0)};
    const std::vector<HypSample> h = {hyp(1, d, 0)};
    acc.accumulate_frame(0, g, h);
    const auto s = finalize(acc);
    CHECK(s.matches == (match ? 1u : 0u));
    CHECK(s.fn == (match ? 0u : 1u));
    CHECK(s.fp == (match ? 0u : 1u));
  }
}

TEST_CASE("correspondences persist while inside the gate") {
  Scripted s;
  s.gt[0] = {gt(0, "a", 0, 0)};
  s.hyp[0] = {hyp(1, 0, 0)};
  s.gt[1] = {gt(1, "a", 0, 0)};
  s.hyp[1] = {hyp(2, 0.2, 0), hyp(1, 1.45, 0)};
  s.gt[2] = {gt(2, "a", 0, 0)};
  s.hyp[2] = {hyp(2, 0.2, 0)};
  const auto acc = s.accumulate();
  const auto sum = finalize(acc);
  CHECK(sum.ids == 1);
  CHECK(sum.fp == 1);
  std::vector<Event> frame1, frame2;
  for (const auto& e : acc.events()) {
    if (e.t == 1) frame1.push_back(e);
    if (e.t == 2) frame2.push_back(e);
  }
  REQUIRE(frame1.size() == 2);
  CHECK(frame1[0].kind == EventKind::Match);
  CHECK(frame1[0].hyp_id == 1);
  CHECK_FALSE(frame1[0].switched);
  CHECK(frame1[1].kind == EventKind::FalsePositive);
  CHECK(frame1[1].hyp_id == 2);
  REQUIRE(frame2.size() == 1);
  CHECK(frame2[0].switched);
  CHECK(frame2[0].previous_hyp == 1);
}

TEST_CASE("hand-counted five-frame sequence") {
  Scripted s;
  for (Frame t = 0; t < 5; ++t) {
    s.gt[t] = {gt(t, "a", 0, 0), gt(t, "b", 10, 0)};
    s.hyp[t] = {hyp(1, 0, 0)};
  }
  s.hyp[0].push_back(hyp(2, 10, 0));
  s.hyp[1].push_back(hyp(2, 10, 0));
  s.hyp[3].push_back(hyp(3, 10, 0));
  s.hyp[4].push_back(hyp(3, 10, 0));
  s.hyp[4].push_back(hyp(4, 5, 5));
  const auto m = finalize(s.accumulate());
  CHECK(m.gt == 10);
  CHECK(m.matches == 9);
  CHECK(m.fn == 1);
  CHECK(m.fp == 1);
  CHECK(m.ids == 1);
  CHECK(m.frag == 1);
  CHECK(m.mota == doctest::Approx(0.7));
  CHECK(m.motp == 0.0);
  CHECK(m.recall == doctest::Approx(0.9));
  CHECK(m.precision == doctest::Approx(0.9));
  CHECK(m.mt == 2);
  CHECK(m.ml == 0);
  CHECK(m.num_gt_ids == 2);
  CHECK(m.num_hyp_ids == 4);
  CHECK(m.fpr == doctest::Approx(0.2));
  CHECK(m.fnr == doctest::Approx(0.2));
  CHECK(m.idf1 == doctest::Approx(idf1_oracle(s, 1.5)));
}

TEST_CASE("swapped hypotheses count two switches") {
  Scripted s;
  for (Frame t = 0; t < 5; ++t) {
    s.gt[t] = {gt(t, "a", 0, 0), gt(t, "b", 5, 0)};
    const bool swapped = t >= 2;
    s.hyp[t] = {hyp(1, swapped ? 5 : 0, 0), hyp(2, swapped ? 0 : 5, 0)};
  }
  const auto m = finalize(s.accumulate());
  CHECK(m.ids == 2);
  CHECK(m.mota == doctest::Approx(0.8));
  CHECK(m.idtp == doctest::Approx(oracle::brute_max_overlap(count_idtp(s, 1.5))));
  CHECK(m.idf1 == doctest::Approx(idf1_oracle(s, 1.5)));
  CHECK(m.idf1 < 1.0);
}

TEST_CASE("accumulator input errors") {
  MotAccumulator acc;
  const std::vector<GroundTruthRecord> twice = {gt(0, "a", 0, 0), gt(0, "a", 1, 0)};
  CHECK_THROWS_AS(acc.accumulate_frame(0, twice, {}), DuplicateId);
  const std::vector<HypSample> dup = {hyp(1, 0, 0), hyp(1, 1, 1)};
  CHECK_THROWS_AS(acc.accumulate_frame(0, {}, dup), DuplicateId);
  const std::vector<GroundTruthRecord> other = {gt(3, "a", 0, 0)};
  CHECK_THROWS_AS(acc.accumulate_frame(0, other, {}), std::invalid_argument);
  CHECK_THROWS_AS(finalize(MotAccumulator{}), EmptyAccumulator);
  CHECK_THROWS_AS(MotAccumulator{0.0}, std::invalid_argument);
}

TEST_CASE("property: max_identity_overlap equals exhaustive pairing") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> dim(1, 6), cell(0, 20);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(dim(rng)));
    const int cols = dim(rng);
    for (auto& row : w)
      for (int c = 0; c < cols; ++c) row.push_back(cell(rng));
    CHECK(max_identity_overlap(w) == oracle::brute_max_overlap(w));
  }
  CHECK(max_identity_overlap({}) == 0.0);
}

TEST_CASE("property: summary identities, event partition and renaming invariance") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 1500; ++trial) {
    const Scripted s = random_script(rng);
    const auto acc = s.accumulate();
    const auto m = finalize(acc);

    CHECK(m.mota <= 1.0);
    if (m.gt > 0) CHECK(1.0 - m.mota == doctest::Approx(static_cast<double>(m.fn + m.fp + m.ids) / m.gt));
    CHECK(m.motp <= 1.5);
    for (double r : {m.recall, m.precision, m.idf1, m.mt_ratio, m.ml_ratio}) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
    CHECK(m.idf1 == doctest::Approx(idf1_oracle(s, 1.5)));

    std::map<Frame, std::multiset<std::string>> gt_seen;
    std::map<Frame, std::multiset<int>> hyp_seen;
    for (const auto& e : acc.events()) {
      if (e.gt_id) gt_seen[e.t].insert(*e.gt_id);
      if (e.hyp_id && e.kind != EventKind::Miss) hyp_seen[e.t].insert(*e.hyp_id);
      if (e.switched) CHECK(e.kind == EventKind::Match);
      if (e.kind == EventKind::Match) CHECK(e.distance <= 1.5);
    }
    for (const auto& [t, v] : s.gt) {
      std::multiset<std::string> expect;
      for (const auto& g : v) expect.insert(g.person_id);
      CHECK(gt_seen[t] == expect);
    }
    for (const auto& [t, v] : s.hyp) {
      std::multiset<int> expect;
      for (const auto& h : v) expect.insert(h.track_id);
      CHECK(hyp_seen[t] == expect);
    }

    Scripted renamed = s;
    for (auto& [t, v] : renamed.hyp)
      for (auto& h : v) h.track_id = 1000 - h.track_id;
    for (auto& [t, v] : renamed.gt)
      for (auto& g : v) g.person_id = "z" + g.person_id;
    const auto r = finalize(renamed.accumulate());
    CHECK(r.mota == m.mota);
    CHECK(r.motp == m.motp);
    CHECK(r.ids == m.ids);
    CHECK(r.idf1 == doctest::Approx(m.idf1));
    CHECK(r.frag == m.frag);
  }
}

TEST_CASE("angular_error and accuracy_at examples") {
  CHECK(angular_error(350, 10) == doctest::Approx(20));
  CHECK(angular_error(0, 180) == doctest::Approx(180));
  CHECK(angular_error(90, 90) == 0.0);
  CHECK(angular_error(-10, 10) == doctest::Approx(20));
  CHECK(angular_error(720, 0) == doctest::Approx(0));
  const std::vector<double> e = {5, 15, 30};
  CHECK(accuracy_at(e, 15) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy_at(e, 4.9) == 0.0);
  CHECK(accuracy_at(e, 90) == 1.0);
  CHECK_THROWS_AS(accuracy_at({}, 10), EmptyInput);
}

TEST_CASE("pearson_r against direct formulas") {
  const std::vector<double> x = {1, 2, 3, 4}, y = {1, 3, 2, 5};
  const auto c = pearson_r(x, y);
  // Centered sums: sxy = 5.5, sxx = 5, syy = 8.75.
  const double r = 5.5 / std::sqrt(5.0 * 8.75);
  CHECK(c.r == doctest::Approx(r));
  CHECK(c.n == 4);
  // Student's t with 2 degrees of freedom has a closed-form tail.
  const double t = r * std::sqrt(2.0 / (1.0 - r * r));
  CHECK(c.p == doctest::Approx(1.0 - std::abs(t) / std::sqrt(t * t + 2.0)));

  const std::vector<double> line = {2, 4, 6, 8};
  CHECK(pearson_r(x, line).r == doctest::Approx(1.0));
  CHECK(pearson_r(x, line).p == 0.0);
  const std::vector<double> down = {8, 6, 4, 2};
  CHECK(pearson_r(x, down).r == doctest::Approx(-1.0));

  const std::vector<double> flat = {3, 3, 3, 3}, short_x = {1, 2}, short_y = {2, 1};
  CHECK_THROWS_AS(pearson_r(x, flat), DegenerateVariance);
  CHECK_THROWS_AS(pearson_r(short_x, short_y), DegenerateVariance);
  CHECK_THROWS_AS(pearson_r(x, short_y), std::invalid_argument);
}

TEST_CASE("property: pearson_r is symmetric and invariant to affine maps") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> a(0.1, 10), b(-50, 50);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(20), y(20), z(20);
    for (std::size_t i = 0; i < 20; ++i) {
      x[i] = n(rng);
      y[i] = 0.5 * x[i] + n(rng);
    }
    const double s = a(rng), o = b(rng);
    for (std::size_t i = 0; i < 20; ++i) z[i] = s * y[i] + o;
    const auto c = pearson_r(x, y);
    CHECK(c.r == doctest::Approx(pearson_r(y, x).r));
    CHECK(c.r == doctest::Approx(pearson_r(x, z).r));
    CHECK(c.p >= 0.0);
    CHECK(c.p <= 1.0);
  }
}

TEST_CASE("factor_analysis correlates every factor") {
  std::vector<FactorSample> samples;
  for (int i = 0; i < 10; ++i) {
    FactorSample s;
    s.factors = {1.0 + i, 10.0 * (i % 3), 0.1 * (i % 4), 0.05 * i * i};
    s.loc_err_m = 0.2 * (1.0 + i);
    samples.push_back(s);
  }
  auto out = factor_analysis(samples);
  REQUIRE(out.size() == kFactorNames.size());
  CHECK(out[0].factor == "distance");
  CHECK(out[0].localization.r == doctest::Approx(1.0));
  CHECK_FALSE(out[0].orientation);

  for (int i = 0; i < 10; ++i) samples[static_cast<std::size_t>(i)].ori_err_deg = 3.0 * i;
  out = factor_analysis(samples);
  REQUIRE(out[0].orientation);
  CHECK(out[0].orientation->r == doctest::Approx(1.0));

  for (auto& s : samples) s.ori_err_deg = 7.0;
  CHECK_THROWS_AS(factor_analysis(samples), DegenerateVariance);
}

TEST_CASE("area_of: explicit id, then lexicographically first containing area") {
  const std::vector<Area> areas = {{"lobby", 0, 0, 10, 10}, {"atrium", 5, 5, 15, 15}};
  CHECK(area_of(gt(0, "a", 7, 7), areas) == "atrium");
  CHECK(area_of(gt(0, "a", 1, 1), areas) == "lobby");
  CHECK_FALSE(area_of(gt(0, "a", 20, 20), areas));
  auto tagged = gt(0, "a", 1, 1);
  tagged.area_id = "hall";
  CHECK(area_of(tagged, areas) == "hall");
}

TEST_CASE("evaluate: coasted states, orientation summary and per-area results") {
  std::vector<GroundTruthRecord> truth;
  Track tr;
  tr.track_id = 7;
  for (Frame t = 0; t < 4; ++t) {
    truth.push_back(gt(t, "a", 2, 2, 0.0));
    tr.states.emplace_back(t, Vec2(2, 2), Vec2::Zero(), Vec2(1, 0), Vec2::Zero(), Eigen::Matrix4d::Zero(), t != 2);
  }
  const std::vector<Track> tracks = {tr};

  const auto with = evaluate(truth, tracks);
  CHECK(with.mot.matches == 4);
  CHECK(with.mot.mota == 1.0);
  REQUIRE(with.orientation);
  CHECK(with.orientation->count == 4);
  CHECK(with.orientation->mae_deg == doctest::Approx(90));
  CHECK(with.orientation->acc_at.at(90.0) == 1.0);
  CHECK(with.orientation->acc_at.at(45.0) == 0.0);

  EvalConfig strict;
  strict.count_coasted = false;
  const auto without = evaluate(truth, tracks, strict);
  CHECK(without.mot.fn == 1);
  CHECK(without.mot.frag == 1);

  truth.push_back(gt(0, "b", 20, 2));
  EvalConfig areas;
  areas.areas = {{"west", 0, 0, 10, 10}, {"east", 10, 0, 30, 10}};
  const auto split = evaluate(truth, tracks, areas);
  REQUIRE(split.per_area.count("west"));
  REQUIRE(split.per_area.count("east"));
  CHECK(split.per_area.at("west").mota == 1.0);
  CHECK(split.per_area.at("east").fn == 1);
  CHECK(split.per_area.at("east").fp == 0);
  CHECK(split.mot.fn == 1);

  EvalConfig bad;
  bad.accuracy_x = {30, 10};
  CHECK_THROWS_AS(evaluate(truth, tracks, bad), ValidationError);
  CHECK_THROWS_AS(evaluate({}, {}), EmptyAccumulator);
}
