#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vadkit/scoring.hpp"
#include "vadkit/timeline.hpp"

namespace vadkit {

// Temperatures below this would overflow exp() even with max-subtraction.
inline constexpr double kMinTemperature = 1e-6;

enum class Strategy { kAnomalyFocused, kUniform, kRandom };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);  // accepts "anomaly" alias

// Per-segment ceiling max_i for the allocator. Selecting more distinct
// frames than a segment holds is impossible, so the default is its length.
struct MaxPerSegment {
  enum class Kind { kSegmentLength, kFixedCap, kLengthCappedAt };

  Kind kind = Kind::kSegmentLength;
  std::int64_t cap = 0;

  static MaxPerSegment segment_length() { return {Kind::kSegmentLength, 0}; }
  static MaxPerSegment fixed(std::int64_t c) { return {Kind::kFixedCap, c}; }
  static MaxPerSegment length_capped_at(std::int64_t c) { return {Kind::kLengthCappedAt, c}; }

  std::int64_t resolve(std::int64_t segment_length) const;
  std::string to_string() const;
  static MaxPerSegment from_string(std::string_view text);

  bool operator==(const MaxPerSegment&) const = default;
};

struct AllocationConfig {
  std::int64_t budget = 1;   // N, total frames to select
  double temperature = 1.0;  // tau
  MaxPerSegment max_per_segment{};
  Strategy strategy = Strategy::kAnomalyFocused;
  std::uint64_t seed = 0;            // random strategy only
  bool uniform_per_segment = false;  // uniform baseline: space within segments
                                     // instead of globally

  bool operator==(const AllocationConfig&) const = default;
};

struct AllocationPlan {
  std::string video_id;
  std::vector<double> weights;        // p_i, sums to 1
  std::vector<double> raw;            // n-hat_i = N * p_i
  std::vector<std::int64_t> counts;   // n_i, sums to N
  std::vector<std::int64_t> frames;   // selected global indices, sorted, distinct
  Strategy strategy_used = Strategy::kAnomalyFocused;
  AllocationConfig config;

  bool operator==(const AllocationPlan&) const = default;
};

// p_i = exp(s_i / tau) / sum_j exp(s_j / tau), computed with max-subtraction.
// Weights can underflow to zero once the score spread exceeds ~700 * tau.
std::vector<double> softmax_weights(std::span<const double> scores, double temperature);

// Anomaly-focused integer apportionment:
//   raw targets N * p_i, clamp floor(raw) into [1, max_i], then adjust the
//   residual one frame at a time by descending (raw_i - n_i), ties to the
//   lower segment index; over-allocation is trimmed from segments above one
//   frame by ascending (raw_i - n_i), ties to the higher index.
// Requires N >= M and sum(max_i) >= N.
std::vector<std::int64_t> allocate_counts(std::span<const double> scores,
                                          std::span<const std::int64_t> lengths,
                                          const AllocationConfig& config);

// Image-benchmark extraction rule: 3 frames per abnormal segment (clamped to
// its length), 1 per normal segment.
std::vector<std::int64_t> heuristic_extract(const ScoredTimeline& scored);

enum class SelectionMode { kEvenlySpaced, kSeededRandom };

// Turns per-segment counts into concrete global frame indices. Evenly spaced
// placement uses a_i + round_half_up(k * (len-1) / (count-1)) with collisions
// nudged rightward; a single frame lands on the segment midpoint. Random
// placement draws without replacement from a stream seeded by
// mix_seed(seed, video_id, segment_index). Zero counts skip the segment.
std::vector<std::int64_t> select_frames(std::span<const std::int64_t> counts,
                                        const SegmentTimeline& timeline, SelectionMode mode,
                                        std::uint64_t seed);

// N frames evenly spaced over the whole video [0, T-1] (half-even rounding);
// a single frame lands on the global midpoint.
std::vector<std::int64_t> uniform_global_frames(std::int64_t frame_count, std::int64_t budget);

// Uniform baseline counts: global spacing first, then counts per segment.
// Segments may receive zero frames.
std::vector<std::int64_t> allocate_uniform(std::span<const std::int64_t> lengths,
                                           std::int64_t budget);

// Flagged variant: largest-remainder apportionment of N by segment length,
// no minimum; frames are then spaced within each segment.
std::vector<std::int64_t> allocate_uniform_per_segment(std::span<const std::int64_t> lengths,
                                                       std::int64_t budget);

// Random baseline counts: one frame per segment, then N - M draws over
// segments proportional to length, skipping full ones. Requires N >= M.
std::vector<std::int64_t> allocate_random(std::span<const std::int64_t> lengths,
                                          std::int64_t budget, std::uint64_t seed);

// Runs the configured strategy end to end for one scored video.
AllocationPlan make_plan(const ScoredTimeline& scored, const AllocationConfig& config);

// Plan file: one JSON object per line with the config echo,
//   {"video_id", "strategy", "budget", "temperature", "seed",
//    "max_per_segment", "uniform_per_segment", "counts", "frames",
//    "tool_version"}
void serialize_plans(std::span<const AllocationPlan> plans, std::ostream& out);
std::vector<AllocationPlan> parse_plans(std::istream& in);

}  // namespace vadkit
