#include "vadkit/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "vadkit/common.hpp"

namespace vadkit {

using nlohmann::json;

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kAnomalyFocused: return "anomaly_focused";
    case Strategy::kUniform: return "uniform";
    case Strategy::kRandom: return "random";
  }
  throw std::logic_error("unknown strategy");
}

Strategy strategy_from_name(std::string_view name) {
  if (name == "anomaly_focused" || name == "anomaly") return Strategy::kAnomalyFocused;
  if (name == "uniform") return Strategy::kUniform;
  if (name == "random") return Strategy::kRandom;
  throw ValidationError("unknown strategy \"" + std::string(name) + "\"");
}

std::int64_t MaxPerSegment::resolve(std::int64_t segment_length) const {
  switch (kind) {
    case Kind::kSegmentLength: return segment_length;
    case Kind::kFixedCap: return cap;
    case Kind::kLengthCappedAt: return std::min(segment_length, cap);
  }
  throw std::logic_error("unknown cap kind");
}

std::string MaxPerSegment::to_string() const {
  switch (kind) {
    case Kind::kSegmentLength: return "len";
    case Kind::kFixedCap: return "fixed:" + std::to_string(cap);
    case Kind::kLengthCappedAt: return std::to_string(cap);
  }
  throw std::logic_error("unknown cap kind");
}

MaxPerSegment MaxPerSegment::from_string(std::string_view text) {
  if (text == "len") return segment_length();
  const bool is_fixed = text.rfind("fixed:", 0) == 0;
  const std::string digits(is_fixed ? text.substr(6) : text);
  std::int64_t c = 0;
  try {
    std::size_t used = 0;
    c = std::stoll(digits, &used);
    if (used != digits.size()) throw std::invalid_argument(digits);
  } catch (const std::exception&) {
    throw ValidationError("bad max-per-segment \"" + std::string(text) +
                          "\" (expected \"len\", a cap, or \"fixed:<cap>\")");
  }
  if (c < 1) throw ValidationError("max-per-segment cap must be >= 1");
  return is_fixed ? fixed(c) : length_capped_at(c);
}

std::vector<double> softmax_weights(std::span<const double> scores, double temperature) {
  if (scores.empty()) throw ValidationError("softmax over empty score list");
  if (std::isnan(temperature) || temperature <= 0.0) {
    throw ValidationError("temperature must be positive");
  }
  if (temperature < kMinTemperature) {
    throw ValidationError("temperature below " + std::to_string(kMinTemperature));
  }
  double max_score = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("non-finite score in softmax input");
    max_score = std::max(max_score, s);
  }
  std::vector<double> weights(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    weights[i] = std::exp((scores[i] - max_score) / temperature);
    sum += weights[i];
  }
  for (double& w : weights) w /= sum;
  return weights;
}

namespace {

std::vector<std::int64_t> resolve_caps(std::span<const std::int64_t> lengths,
                                       const MaxPerSegment& policy) {
  std::vector<std::int64_t> caps(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1) throw ValidationError("segment length must be >= 1");
    caps[i] = policy.resolve(lengths[i]);
    if (caps[i] < 1) throw ValidationError("max per segment must be >= 1");
    if (caps[i] > lengths[i]) {
      throw ValidationError("cap " + std::to_string(caps[i]) + " exceeds length " +
                            std::to_string(lengths[i]) + " of segment " + std::to_string(i));
    }
  }
  return caps;
}

// Largest-remainder apportionment of `budget` over fractional targets with
// optional per-part caps and no minimum. Residual goes to the largest
// fractional parts, ties to the lower index.
std::vector<std::int64_t> largest_remainder(const std::vector<double>& targets,
                                            std::int64_t budget,
                                            const std::vector<std::int64_t>& caps) {
  const std::size_t m = targets.size();
  std::vector<std::int64_t> counts(m);
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < m; ++i) {
    counts[i] = std::min(static_cast<std::int64_t>(std::floor(targets[i])), caps[i]);
    sum += counts[i];
  }
  while (sum < budget) {
    std::size_t best = m;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (counts[i] >= caps[i]) continue;
      const double deficit = targets[i] - static_cast<double>(counts[i]);
      if (best == m || deficit > best_deficit) {
        best = i;
        best_deficit = deficit;
      }
    }
    if (best == m) throw ValidationError("budget exceeds capacity");
    ++counts[best];
    ++sum;
  }
  return counts;
}

}  // namespace

std::vector<std::int64_t> allocate_counts(std::span<const double> scores,
                                          std::span<const std::int64_t> lengths,
                                          const AllocationConfig& config) {
  const std::size_t m = scores.size();
  if (m == 0) throw ValidationError("cannot allocate over zero segments");
  if (lengths.size() != m) throw ValidationError("scores and lengths misaligned");
  const std::int64_t budget = config.budget;
  if (budget < 1) throw ValidationError("budget must be >= 1");
  if (budget < static_cast<std::int64_t>(m)) {
    throw ValidationError("budget below segment count (N=" + std::to_string(budget) +
                          ", M=" + std::to_string(m) + ")");
  }
  const std::vector<std::int64_t> caps = resolve_caps(lengths, config.max_per_segment);
  const std::int64_t capacity = std::accumulate(caps.begin(), caps.end(), std::int64_t{0});
  if (capacity < budget) {
    throw ValidationError("budget exceeds capacity (N=" + std::to_string(budget) +
                          ", sum max_i=" + std::to_string(capacity) + ")");
  }

  const std::vector<double> weights = softmax_weights(scores, config.temperature);
  std::vector<double> raw(m);
  std::vector<std::int64_t> counts(m);
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < m; ++i) {
    raw[i] = static_cast<double>(budget) * weights[i];
    counts[i] = std::clamp(static_cast<std::int64_t>(std::floor(raw[i])), std::int64_t{1}, caps[i]);
    sum += counts[i];
  }

  // Residual adjustment, one frame at a time so the deficits stay current.
  // Under-budget: feed the most under-served uncapped segment, ties to the
  // lower index. Over-budget (the one-frame floor can inflate the sum): trim
  // the most over-served segment still above one frame, ties to the higher
  // index. Exact float comparison is deliberate; equal scores produce
  // bit-equal deficits and fall through to the index rule.
  while (sum < budget) {
    std::size_t best = m;
    double best_deficit = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (counts[i] >= caps[i]) continue;
      const double deficit = raw[i] - static_cast<double>(counts[i]);
      if (best == m || deficit > best_deficit) {
        best = i;
        best_deficit = deficit;
      }
    }
    if (best == m) throw std::logic_error("no uncapped segment despite spare capacity");
    ++counts[best];
    ++sum;
  }
  while (sum > budget) {
    std::size_t best = m;
    double best_deficit = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (counts[i] <= 1) continue;
      const double deficit = raw[i] - static_cast<double>(counts[i]);
      if (best == m || deficit <= best_deficit) {
        best = i;
        best_deficit = deficit;
      }
    }
    if (best == m) throw std::logic_error("no trimmable segment despite excess");
    --counts[best];
    --sum;
  }
  return counts;
}

std::vector<std::int64_t> heuristic_extract(const ScoredTimeline& scored) {
  const auto& segments = scored.timeline.segments;
  if (scored.labels.size() != segments.size()) {
    throw ValidationError("scored timeline labels misaligned");
  }
  std::vector<std::int64_t> counts(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    counts[i] = scored.labels[i] ? std::min<std::int64_t>(3, segments[i].length()) : 1;
  }
  return counts;
}

namespace {

void evenly_spaced_into(const Segment& seg, std::int64_t count,
                        std::vector<std::int64_t>& out) {
  if (count == 1) {
    out.push_back((seg.start + seg.end) / 2);
    return;
  }
  const auto span = static_cast<double>(seg.length() - 1);
  std::int64_t prev = seg.start - 1;
  for (std::int64_t k = 0; k < count; ++k) {
    const std::int64_t offset =
        round_half_up(static_cast<double>(k) * span / static_cast<double>(count - 1));
    const std::int64_t idx = std::max(seg.start + offset, prev + 1);
    if (idx > seg.end) throw std::logic_error("evenly spaced index escaped its segment");
    out.push_back(idx);
    prev = idx;
  }
}

void random_frames_into(const Segment& seg, std::int64_t count, Rng& rng,
                        std::vector<std::int64_t>& out) {
  // Floyd's sampling: uniform `count`-subset without replacement.
  std::set<std::int64_t> chosen;
  const std::int64_t len = seg.length();
  for (std::int64_t j = len - count; j < len; ++j) {
    const auto t = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
    if (!chosen.insert(seg.start + t).second) chosen.insert(seg.start + j);
  }
  out.insert(out.end(), chosen.begin(), chosen.end());
}

}  // namespace

std::vector<std::int64_t> select_frames(std::span<const std::int64_t> counts,
                                        const SegmentTimeline& timeline, SelectionMode mode,
                                        std::uint64_t seed) {
  if (counts.size() != timeline.segments.size()) {
    throw ValidationError("counts and segments misaligned");
  }
  std::int64_t total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || counts[i] > timeline.segments[i].length()) {
      throw ValidationError("count " + std::to_string(counts[i]) + " invalid for segment " +
                            std::to_string(i) + " of length " +
                            std::to_string(timeline.segments[i].length()));
    }
    total += counts[i];
  }
  std::vector<std::int64_t> frames;
  frames.reserve(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const Segment& seg = timeline.segments[i];
    const std::int64_t count = counts[i];
    if (count == 0) continue;
    if (mode == SelectionMode::kEvenlySpaced) {
      evenly_spaced_into(seg, count, frames);
    } else {
      Rng rng(mix_seed(seed, timeline.video.video_id, static_cast<std::uint64_t>(i)));
      random_frames_into(seg, count, rng, frames);
    }
  }
  // Segments are disjoint and ascending, so the concatenation is sorted.
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i] <= frames[i - 1]) throw std::logic_error("selected frames not strictly sorted");
  }
  return frames;
}

std::vector<std::int64_t> uniform_global_frames(std::int64_t frame_count, std::int64_t budget) {
  if (budget < 1) throw ValidationError("budget must be >= 1");
  if (budget > frame_count) {
    throw ValidationError("budget " + std::to_string(budget) + " exceeds frame count " +
                          std::to_string(frame_count));
  }
  if (budget == 1) return {(frame_count - 1) / 2};
  std::vector<std::int64_t> frames(budget);
  const auto span = static_cast<double>(frame_count - 1);
  for (std::int64_t k = 0; k < budget; ++k) {
    frames[k] = round_half_even(static_cast<double>(k) * span / static_cast<double>(budget - 1));
  }
  return frames;
}

namespace {

std::vector<std::int64_t> counts_from_global_frames(std::span<const std::int64_t> lengths,
                                                    const std::vector<std::int64_t>& frames) {
  std::vector<std::int64_t> counts(lengths.size(), 0);
  std::size_t seg = 0;
  std::int64_t seg_end = lengths.empty() ? -1 : lengths[0] - 1;
  for (std::int64_t f : frames) {
    while (f > seg_end) {
      ++seg;
      seg_end += lengths[seg];
    }
    ++counts[seg];
  }
  return counts;
}

}  // namespace

std::vector<std::int64_t> allocate_uniform(std::span<const std::int64_t> lengths,
                                           std::int64_t budget) {
  if (lengths.empty()) throw ValidationError("cannot allocate over zero segments");
  const std::int64_t total = std::accumulate(lengths.begin(), lengths.end(), std::int64_t{0});
  return counts_from_global_frames(lengths, uniform_global_frames(total, budget));
}

std::vector<std::int64_t> allocate_uniform_per_segment(std::span<const std::int64_t> lengths,
                                                       std::int64_t budget) {
  if (lengths.empty()) throw ValidationError("cannot allocate over zero segments");
  const std::int64_t total = std::accumulate(lengths.begin(), lengths.end(), std::int64_t{0});
  if (budget < 1) throw ValidationError("budget must be >= 1");
  if (budget > total) throw ValidationError("budget exceeds frame count");
  std::vector<double> targets(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    targets[i] = static_cast<double>(budget) * static_cast<double>(lengths[i]) /
                 static_cast<double>(total);
  }
  return largest_remainder(targets, budget, std::vector<std::int64_t>(lengths.begin(), lengths.end()));
}

std::vector<std::int64_t> allocate_random(std::span<const std::int64_t> lengths,
                                          std::int64_t budget, std::uint64_t seed) {
  const std::size_t m = lengths.size();
  if (m == 0) throw ValidationError("cannot allocate over zero segments");
  if (budget < static_cast<std::int64_t>(m)) {
    throw ValidationError("budget below segment count (N=" + std::to_string(budget) +
                          ", M=" + std::to_string(m) + ")");
  }
  std::int64_t capacity = 0;
  for (std::int64_t len : lengths) {
    if (len < 1) throw ValidationError("segment length must be >= 1");
    capacity += len;
  }
  if (capacity < budget) throw ValidationError("budget exceeds capacity");

  std::vector<std::int64_t> counts(m, 1);
  Rng rng(seed);
  for (std::int64_t k = static_cast<std::int64_t>(m); k < budget; ++k) {
    std::int64_t open = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (counts[i] < lengths[i]) open += lengths[i];
    }
    auto pick = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(open)));
    for (std::size_t i = 0; i < m; ++i) {
      if (counts[i] >= lengths[i]) continue;
      if (pick < lengths[i]) {
        ++counts[i];
        break;
      }
      pick -= lengths[i];
    }
  }
  return counts;
}

AllocationPlan make_plan(const ScoredTimeline& scored, const AllocationConfig& config) {
  const SegmentTimeline& timeline = scored.timeline;
  const std::vector<std::int64_t> lengths = timeline.segment_lengths();
  const std::int64_t total = timeline.video.frame_count;

  AllocationPlan plan;
  plan.video_id = timeline.video.video_id;
  plan.strategy_used = config.strategy;
  plan.config = config;

  switch (config.strategy) {
    case Strategy::kAnomalyFocused: {
      const std::vector<double> scores = scored.score_values();
      plan.weights = softmax_weights(scores, config.temperature);
      plan.raw.resize(plan.weights.size());
      for (std::size_t i = 0; i < plan.weights.size(); ++i) {
        plan.raw[i] = static_cast<double>(config.budget) * plan.weights[i];
      }
      plan.counts = allocate_counts(scores, lengths, config);
      plan.frames = select_frames(plan.counts, timeline, SelectionMode::kEvenlySpaced, config.seed);
      break;
    }
    case Strategy::kUniform: {
      if (config.uniform_per_segment) {
        plan.counts = allocate_uniform_per_segment(lengths, config.budget);
        plan.frames = select_frames(plan.counts, timeline, SelectionMode::kEvenlySpaced, config.seed);
      } else {
        plan.frames = uniform_global_frames(total, config.budget);
        plan.counts = counts_from_global_frames(lengths, plan.frames);
      }
      plan.weights.resize(lengths.size());
      plan.raw.resize(lengths.size());
      for (std::size_t i = 0; i < lengths.size(); ++i) {
        plan.weights[i] = static_cast<double>(lengths[i]) / static_cast<double>(total);
        plan.raw[i] = static_cast<double>(config.budget) * plan.weights[i];
      }
      break;
    }
    case Strategy::kRandom: {
      const std::uint64_t video_seed = mix_seed(config.seed, timeline.video.video_id, 0);
      plan.counts = allocate_random(lengths, config.budget, video_seed);
      plan.frames = select_frames(plan.counts, timeline, SelectionMode::kSeededRandom, config.seed);
      plan.weights.resize(lengths.size());
      plan.raw.resize(lengths.size());
      for (std::size_t i = 0; i < lengths.size(); ++i) {
        plan.weights[i] = static_cast<double>(lengths[i]) / static_cast<double>(total);
        plan.raw[i] = static_cast<double>(config.budget) * plan.weights[i];
      }
      break;
    }
  }
  if (static_cast<std::int64_t>(plan.frames.size()) != config.budget) {
    throw std::logic_error("plan frame count does not match budget");
  }
  return plan;
}

void serialize_plans(std::span<const AllocationPlan> plans, std::ostream& out) {
  for (const AllocationPlan& plan : plans) {
    json row;
    row["video_id"] = plan.video_id;
    row["strategy"] = std::string(strategy_name(plan.strategy_used));
    row["budget"] = plan.config.budget;
    row["temperature"] = plan.config.temperature;
    row["seed"] = plan.config.seed;
    row["max_per_segment"] = plan.config.max_per_segment.to_string();
    row["uniform_per_segment"] = plan.config.uniform_per_segment;
    row["counts"] = plan.counts;
    row["frames"] = plan.frames;
    row["tool_version"] = kToolVersion;
    out << row.dump() << '\n';
  }
}

std::vector<AllocationPlan> parse_plans(std::istream& in) {
  std::vector<AllocationPlan> plans;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      throw ValidationError("malformed plan row (line " + std::to_string(line_no) + ")");
    }
    try {
      AllocationPlan plan;
      plan.video_id = row.at("video_id").get<std::string>();
      plan.strategy_used = strategy_from_name(row.at("strategy").get<std::string>());
      plan.config.strategy = plan.strategy_used;
      plan.config.budget = row.at("budget").get<std::int64_t>();
      plan.config.temperature = row.at("temperature").get<double>();
      plan.config.seed = row.at("seed").get<std::uint64_t>();
      plan.config.max_per_segment = MaxPerSegment::from_string(row.at("max_per_segment").get<std::string>());
      plan.config.uniform_per_segment = row.value("uniform_per_segment", false);
      plan.counts = row.at("counts").get<std::vector<std::int64_t>>();
      plan.frames = row.at("frames").get<std::vector<std::int64_t>>();
      plans.push_back(std::move(plan));
    } catch (const json::exception& e) {
      throw ValidationError("malformed plan row (line " + std::to_string(line_no) +
                            "): " + e.what());
    }
  }
  return plans;
}

}  // namespace vadkit
