#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "vadkit/allocation.hpp"
#include "vadkit/common.hpp"

using namespace vadkit;

namespace {

SegmentTimeline fixed_timeline(const std::vector<std::int64_t>& lengths,
                               const std::string& id = "v") {
  SegmentTimeline tl;
  tl.video.video_id = id;
  std::int64_t pos = 0;
  int index = 0;
  for (std::int64_t len : lengths) {
    tl.segments.push_back(Segment{index++, pos, pos + len - 1});
    pos += len;
  }
  tl.video.frame_count = pos;
  tl.validate();
  return tl;
}

ScoredTimeline scored(const std::vector<std::int64_t>& lengths, const std::vector<double>& values,
                      double threshold = 0.5) {
  ScoredTimeline st;
  st.timeline = fixed_timeline(lengths);
  st.threshold = threshold;
  for (std::size_t i = 0; i < values.size(); ++i) {
    st.scores.push_back(SegmentScore{static_cast<int>(i), values[i]});
    st.labels.push_back(values[i] >= threshold ? 1 : 0);
  }
  return st;
}

AllocationConfig anomaly_config(std::int64_t budget, double tau) {
  AllocationConfig cfg;
  cfg.budget = budget;
  cfg.temperature = tau;
  return cfg;
}

}  // namespace

TEST_CASE("softmax: symmetric and single-segment cases") {
  const std::vector<double> equal{0.5, 0.5};
  auto p = softmax_weights(equal, 1.0);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));

  const std::vector<double> one{0.9};
  p = softmax_weights(one, 2.0);
  CHECK(p.size() == 1);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax: reference values at tau 0.5") {
  const std::vector<double> s{0.9, 0.2, 0.1};
  const auto p = softmax_weights(s, 0.5);
  CHECK(std::fabs(p[0] - 0.6904) < 1e-4);
  CHECK(std::fabs(p[1] - 0.1703) < 1e-4);
  CHECK(std::fabs(p[2] - 0.1394) < 1e-4);
  const auto targets = oracle::softmax_targets(s, 0.5, 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(std::fabs(p[i] - static_cast<double>(targets[i])) < 1e-12);
  }
  double sum = 0.0;
  for (double w : p) {
    CHECK(w > 0.0);
    sum += w;
  }
  CHECK(std::fabs(sum - 1.0) < 1e-9);
}

TEST_CASE("softmax: rejects degenerate input") {
  CHECK_THROWS_AS(softmax_weights({}, 1.0), ValidationError);
  CHECK_THROWS_AS(softmax_weights(std::vector<double>{0.5}, 0.0), ValidationError);
  CHECK_THROWS_AS(softmax_weights(std::vector<double>{0.5}, -1.0), ValidationError);
  CHECK_THROWS_AS(softmax_weights(std::vector<double>{0.5}, 1e-9), ValidationError);
  CHECK_THROWS_AS(softmax_weights(std::vector<double>{std::nan("")}, 1.0), ValidationError);
}

TEST_CASE("softmax: additive score shifts leave weights unchanged") {
  Rng rng(11);
  for (int it = 0; it < 200; ++it) {
    const std::size_t m = 1 + rng.next_below(10);
    std::vector<double> s(m), shifted(m);
    const double shift = (rng.next_unit() - 0.5) * 10.0;
    for (std::size_t i = 0; i < m; ++i) {
      s[i] = rng.next_unit();
      shifted[i] = s[i] + shift;
    }
    const double tau = 0.05 + rng.next_unit() * 9.95;
    const auto a = softmax_weights(s, tau);
    const auto b = softmax_weights(shifted, tau);
    for (std::size_t i = 0; i < m; ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-9);
  }
}

TEST_CASE("allocate: residual added in descending deficit order") {
  const std::vector<double> s{0.6, 0.5, 0.4};
  const std::vector<std::int64_t> lengths{8, 9, 10};
  const auto cfg = anomaly_config(5, 1.0);
  const auto counts = allocate_counts(s, lengths, cfg);
  CHECK(counts == std::vector<std::int64_t>{2, 2, 1});

  // Raw targets straight from the weighting formula.
  const auto targets = oracle::softmax_targets(s, 1.0, 5);
  CHECK(std::fabs(static_cast<double>(targets[0]) - 1.836) < 1e-3);
  CHECK(std::fabs(static_cast<double>(targets[1]) - 1.661) < 1e-3);
  CHECK(std::fabs(static_cast<double>(targets[2]) - 1.503) < 1e-3);

  CHECK(counts == oracle::allocate(s, lengths, 5, 1.0, cfg.max_per_segment));
}

TEST_CASE("allocate: budget equal to segment count forces one frame each") {
  const auto counts =
      allocate_counts(std::vector<double>{0.9, 0.1, 0.1}, std::vector<std::int64_t>{5, 5, 5},
                      anomaly_config(3, 0.1));
  CHECK(counts == std::vector<std::int64_t>{1, 1, 1});
}

TEST_CASE("allocate: capped segment spills its excess to the rest") {
  const std::vector<double> s{0.95, 0.05};
  const std::vector<std::int64_t> lengths{2, 10};
  const auto cfg = anomaly_config(8, 0.2);
  const auto counts = allocate_counts(s, lengths, cfg);
  CHECK(counts == std::vector<std::int64_t>{2, 6});
  CHECK(counts == oracle::allocate(s, lengths, 8, 0.2, cfg.max_per_segment));
}

TEST_CASE("allocate: infeasible budgets are hard errors") {
  CHECK_THROWS_WITH_AS(
      allocate_counts(std::vector<double>{0.5, 0.5, 0.5}, std::vector<std::int64_t>{4, 4, 4},
                      anomaly_config(2, 1.0)),
      doctest::Contains("budget below segment count"), ValidationError);
  CHECK_THROWS_WITH_AS(
      allocate_counts(std::vector<double>{0.5, 0.5}, std::vector<std::int64_t>{2, 2},
                      anomaly_config(5, 1.0)),
      doctest::Contains("budget exceeds capacity"), ValidationError);
}

TEST_CASE("allocate: matches the exhaustive oracle on a small grid") {
  // The acceptance suite runs the full sweep; this keeps a quick slice here.
  const std::vector<std::int64_t> lengths{3, 12, 1, 7};
  for (double tau : {0.25, 1.0, 4.0}) {
    for (std::int64_t budget = 4; budget <= 12; ++budget) {
      Rng rng(static_cast<std::uint64_t>(budget * 100) + static_cast<std::uint64_t>(tau * 10));
      for (int it = 0; it < 40; ++it) {
        std::vector<double> s(4);
        for (double& x : s) x = 0.1 * static_cast<double>(rng.next_below(11));
        for (const auto policy :
             {MaxPerSegment::segment_length(), MaxPerSegment::length_capped_at(3)}) {
          AllocationConfig cfg = anomaly_config(budget, tau);
          cfg.max_per_segment = policy;
          std::int64_t capacity = 0;
          for (auto len : lengths) capacity += policy.resolve(len);
          if (capacity < budget) {
            CHECK_THROWS_AS(allocate_counts(s, lengths, cfg), ValidationError);
            continue;
          }
          CHECK(allocate_counts(s, lengths, cfg) ==
                oracle::allocate(s, lengths, budget, tau, policy));
        }
      }
    }
  }
}

TEST_CASE("allocate: fuzzed invariants hold") {
  Rng rng(2024);
  for (int it = 0; it < 500; ++it) {
    const std::size_t m = 1 + rng.next_below(64);
    std::vector<double> s(m);
    for (double& x : s) x = rng.next_unit();
    std::vector<std::int64_t> lengths(m);
    std::int64_t total = 0;
    for (auto& len : lengths) {
      len = 1 + static_cast<std::int64_t>(rng.next_below(256));
      total += len;
    }
    const std::int64_t budget =
        static_cast<std::int64_t>(m) +
        static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(
            std::min<std::int64_t>(total, 4096) - static_cast<std::int64_t>(m) + 1)));
    const double tau = 0.05 + rng.next_unit() * 9.95;
    const auto cfg = anomaly_config(budget, tau);
    const auto counts = allocate_counts(s, lengths, cfg);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == budget);
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(counts[i] >= 1);
      CHECK(counts[i] <= lengths[i]);
    }
    CHECK(counts == allocate_counts(s, lengths, cfg));
  }
}

TEST_CASE("allocate: raising one score never costs that segment frames") {
  Rng rng(77);
  for (int it = 0; it < 300; ++it) {
    const std::size_t m = 2 + rng.next_below(12);
    std::vector<double> s(m);
    for (double& x : s) x = rng.next_unit() * 0.8;
    std::vector<std::int64_t> lengths(m, 1 << 20);  // caps never bind
    const std::int64_t budget =
        static_cast<std::int64_t>(m) + static_cast<std::int64_t>(rng.next_below(200));
    const double tau = 0.1 + rng.next_unit() * 4.0;
    const auto cfg = anomaly_config(budget, tau);
    const auto before = allocate_counts(s, lengths, cfg);
    const std::size_t target = rng.next_below(m);
    std::vector<double> bumped = s;
    bumped[target] += 0.01 + rng.next_unit() * 0.19;
    const auto after = allocate_counts(bumped, lengths, cfg);
    CHECK(after[target] >= before[target]);
  }
}

TEST_CASE("allocate: equal scores reduce to the largest-remainder uniform split") {
  for (std::size_t m : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{5},
                        std::size_t{8}}) {
    for (std::int64_t budget = static_cast<std::int64_t>(m);
         budget <= static_cast<std::int64_t>(4 * m); ++budget) {
      const std::vector<double> s(m, 0.7);
      const std::vector<std::int64_t> lengths(m, 64);
      const auto counts = allocate_counts(s, lengths, anomaly_config(budget, 123.0));
      // floor(N/M) everywhere, remainder to the lowest indices
      const std::int64_t base = budget / static_cast<std::int64_t>(m);
      const std::int64_t extra = budget % static_cast<std::int64_t>(m);
      for (std::size_t i = 0; i < m; ++i) {
        CHECK(counts[i] == base + (static_cast<std::int64_t>(i) < extra ? 1 : 0));
      }
    }
  }
}

TEST_CASE("heuristic_extract: three per abnormal segment, one per normal") {
  CHECK(heuristic_extract(scored({10, 10, 10}, {0.9, 0.2, 0.5})) ==
        std::vector<std::int64_t>{3, 1, 3});
  CHECK(heuristic_extract(scored({10, 10}, {0.1, 0.3})) == std::vector<std::int64_t>{1, 1});
  // An abnormal segment of two frames cannot yield three distinct ones.
  CHECK(heuristic_extract(scored({2, 10}, {0.9, 0.2})) == std::vector<std::int64_t>{2, 1});
}

TEST_CASE("select_frames: evenly spaced placement") {
  const auto tl = fixed_timeline({10});
  CHECK(select_frames(std::vector<std::int64_t>{1}, tl, SelectionMode::kEvenlySpaced, 0) ==
        std::vector<std::int64_t>{4});
  // offsets round(0), round(4.5) with the half up, round(9)
  CHECK(select_frames(std::vector<std::int64_t>{3}, tl, SelectionMode::kEvenlySpaced, 0) ==
        std::vector<std::int64_t>{0, 5, 9});

  const auto singleton = fixed_timeline({3, 1, 2});
  CHECK(select_frames(std::vector<std::int64_t>{1, 1, 1}, singleton,
                      SelectionMode::kEvenlySpaced, 0) == std::vector<std::int64_t>{1, 3, 4});

  CHECK_THROWS_AS(
      select_frames(std::vector<std::int64_t>{11}, tl, SelectionMode::kEvenlySpaced, 0),
      ValidationError);
}

TEST_CASE("select_frames: spacing formula agrees with direct evaluation") {
  const auto tl = fixed_timeline({37});
  for (std::int64_t count = 2; count <= 37; ++count) {
    const auto frames =
        select_frames(std::vector<std::int64_t>{count}, tl, SelectionMode::kEvenlySpaced, 0);
    REQUIRE(frames.size() == static_cast<std::size_t>(count));
    std::int64_t prev = -1;
    for (std::int64_t k = 0; k < count; ++k) {
      const auto expected = static_cast<std::int64_t>(
          std::floor(static_cast<double>(k) * 36.0 / static_cast<double>(count - 1) + 0.5));
      CHECK(frames[static_cast<std::size_t>(k)] == std::max(expected, prev + 1));
      prev = frames[static_cast<std::size_t>(k)];
    }
  }
}

TEST_CASE("select_frames: seeded random selection is valid and reproducible") {
  const auto tl = fixed_timeline({13, 5, 40}, "vid-7");
  const std::vector<std::int64_t> counts{5, 5, 11};
  const auto a = select_frames(counts, tl, SelectionMode::kSeededRandom, 99);
  const auto b = select_frames(counts, tl, SelectionMode::kSeededRandom, 99);
  CHECK(a == b);
  CHECK(a.size() == 21);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] > a[i - 1]);
  std::size_t k = 0;
  for (std::size_t seg = 0; seg < counts.size(); ++seg) {
    for (std::int64_t j = 0; j < counts[seg]; ++j, ++k) {
      CHECK(tl.segments[seg].contains(a[k]));
    }
  }
  const auto c = select_frames(counts, tl, SelectionMode::kSeededRandom, 100);
  CHECK(a != c);
}

TEST_CASE("uniform_global_frames: spacing and bounds") {
  CHECK(uniform_global_frames(10, 5) == std::vector<std::int64_t>{0, 2, 4, 7, 9});
  CHECK(uniform_global_frames(9, 1) == std::vector<std::int64_t>{4});
  CHECK(uniform_global_frames(4, 4) == std::vector<std::int64_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(uniform_global_frames(4, 5), ValidationError);

  Rng rng(5);
  for (int it = 0; it < 200; ++it) {
    const std::int64_t t = 1 + static_cast<std::int64_t>(rng.next_below(2000));
    const std::int64_t n =
        1 + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(t)));
    const auto frames = uniform_global_frames(t, n);
    REQUIRE(static_cast<std::int64_t>(frames.size()) == n);
    CHECK(frames.front() >= 0);
    CHECK(frames.back() < t);
    for (std::size_t i = 1; i < frames.size(); ++i) CHECK(frames[i] > frames[i - 1]);
  }
}

TEST_CASE("allocate_uniform: counts follow the globally spaced frames") {
  // T=10, N=5 places frames 0,2,4,7,9: three in [0,5], two in [6,9].
  CHECK(allocate_uniform(std::vector<std::int64_t>{6, 4}, 5) == std::vector<std::int64_t>{3, 2});
  const auto skewed = allocate_uniform(std::vector<std::int64_t>{1, 99}, 2);
  CHECK(skewed[0] + skewed[1] == 2);
}

TEST_CASE("allocate_uniform_per_segment: length-proportional largest remainder") {
  CHECK(allocate_uniform_per_segment(std::vector<std::int64_t>{60, 20, 20}, 5) ==
        std::vector<std::int64_t>{3, 1, 1});
  // A short segment may get nothing under the per-segment baseline.
  CHECK(allocate_uniform_per_segment(std::vector<std::int64_t>{1, 99}, 2) ==
        std::vector<std::int64_t>{0, 2});
}

TEST_CASE("allocate_random: min-1, budget exactness, determinism") {
  CHECK(allocate_random(std::vector<std::int64_t>{20}, 7, 3) == std::vector<std::int64_t>{7});
  Rng rng(8);
  for (int it = 0; it < 200; ++it) {
    const std::size_t m = 1 + rng.next_below(16);
    std::vector<std::int64_t> lengths(m);
    std::int64_t total = 0;
    for (auto& len : lengths) {
      len = 1 + static_cast<std::int64_t>(rng.next_below(30));
      total += len;
    }
    const std::int64_t budget =
        static_cast<std::int64_t>(m) +
        static_cast<std::int64_t>(
            rng.next_below(static_cast<std::uint64_t>(total - static_cast<std::int64_t>(m) + 1)));
    const std::uint64_t seed = rng.next_u64();
    const auto counts = allocate_random(lengths, budget, seed);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == budget);
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(counts[i] >= 1);
      CHECK(counts[i] <= lengths[i]);
    }
    CHECK(counts == allocate_random(lengths, budget, seed));
  }
  CHECK_THROWS_AS(allocate_random(std::vector<std::int64_t>{5, 5}, 1, 0), ValidationError);
}

TEST_CASE("make_plan: plans satisfy their invariants for every strategy") {
  const auto st = scored({30, 7, 22, 41}, {0.8, 0.55, 0.1, 0.3});
  for (Strategy strategy : {Strategy::kAnomalyFocused, Strategy::kUniform, Strategy::kRandom}) {
    AllocationConfig cfg;
    cfg.budget = 17;
    cfg.temperature = 0.7;
    cfg.strategy = strategy;
    cfg.seed = 41;
    const auto plan = make_plan(st, cfg);
    CHECK(plan.frames.size() == 17);
    CHECK(std::accumulate(plan.counts.begin(), plan.counts.end(), std::int64_t{0}) == 17);
    double weight_sum = 0.0;
    for (double w : plan.weights) weight_sum += w;
    CHECK(std::fabs(weight_sum - 1.0) < 1e-9);
    for (std::size_t i = 1; i < plan.frames.size(); ++i) {
      CHECK(plan.frames[i] > plan.frames[i - 1]);
    }
    std::size_t k = 0;
    for (std::size_t seg = 0; seg < plan.counts.size(); ++seg) {
      for (std::int64_t j = 0; j < plan.counts[seg]; ++j, ++k) {
        CHECK(st.timeline.segments[seg].contains(plan.frames[k]));
      }
    }
    if (strategy != Strategy::kUniform) {
      for (auto c : plan.counts) CHECK(c >= 1);
    }
    CHECK(make_plan(st, cfg) == plan);
  }
}

TEST_CASE("strategy names parse, including the short alias") {
  CHECK(strategy_from_name("anomaly_focused") == Strategy::kAnomalyFocused);
  CHECK(strategy_from_name("anomaly") == Strategy::kAnomalyFocused);
  CHECK(strategy_from_name("uniform") == Strategy::kUniform);
  CHECK(strategy_from_name("random") == Strategy::kRandom);
  CHECK(strategy_name(Strategy::kAnomalyFocused) == "anomaly_focused");
  CHECK_THROWS_AS(strategy_from_name("greedy"), ValidationError);
}

TEST_CASE("hour-long videos do not lose spacing precision") {
  // ~10^9 frames stays well inside exact double integer range.
  // k * 999999999 / 4 = 0, 249999999.75, 499999999.5, 749999999.25, 999999999
  const std::int64_t t = 1'000'000'000;
  const auto frames = uniform_global_frames(t, 5);
  CHECK(frames ==
        std::vector<std::int64_t>{0, 250000000, 500000000, 749999999, 999999999});

  SegmentTimeline tl;
  tl.video = {"long", t, 30.0};
  tl.segments = {Segment{0, 0, t / 2 - 1}, Segment{1, t / 2, t - 1}};
  // k * 499999999 / 2 = 0, 249999999.5 (half up), 499999999; then the
  // second segment's midpoint.
  const auto picked =
      select_frames(std::vector<std::int64_t>{3, 1}, tl, SelectionMode::kEvenlySpaced, 0);
  CHECK(picked == std::vector<std::int64_t>{0, 250000000, 499999999, 749999999});
}

TEST_CASE("max-per-segment policies resolve and round-trip") {
  CHECK(MaxPerSegment::segment_length().resolve(9) == 9);
  CHECK(MaxPerSegment::fixed(4).resolve(9) == 4);
  CHECK(MaxPerSegment::length_capped_at(4).resolve(9) == 4);
  CHECK(MaxPerSegment::length_capped_at(4).resolve(2) == 2);
  for (const auto* text : {"len", "3", "fixed:5"}) {
    CHECK(MaxPerSegment::from_string(text).to_string() == text);
  }
  CHECK_THROWS_AS(MaxPerSegment::from_string("bogus"), ValidationError);
  CHECK_THROWS_AS(MaxPerSegment::from_string("0"), ValidationError);
  // A fixed cap wider than a segment cannot be honored.
  AllocationConfig cfg = anomaly_config(4, 1.0);
  cfg.max_per_segment = MaxPerSegment::fixed(5);
  CHECK_THROWS_AS(
      allocate_counts(std::vector<double>{0.5, 0.5}, std::vector<std::int64_t>{3, 9}, cfg),
      ValidationError);
}
