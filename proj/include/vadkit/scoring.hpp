#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vadkit/timeline.hpp"

namespace vadkit {

inline constexpr double kDefaultLabelThreshold = 0.5;

struct SegmentScore {
  int segment_index = 0;
  double score = 0.0;  // anomaly likelihood in [0, 1]

  bool operator==(const SegmentScore&) const = default;
};

// Timeline plus per-segment scores and the labels derived from them.
// label[i] == 1 exactly when scores[i] >= threshold.
struct ScoredTimeline {
  SegmentTimeline timeline;
  std::vector<SegmentScore> scores;
  std::vector<int> labels;
  double threshold = kDefaultLabelThreshold;

  std::vector<double> score_values() const;
  bool operator==(const ScoredTimeline&) const = default;
};

// Where segment scores come from. Scorers are consumed as data; no model is
// run here.
class ScorerSource {
 public:
  virtual ~ScorerSource() = default;
  virtual std::optional<double> segment_score(const std::string& video_id,
                                              int segment_index) const = 0;
};

using ScoreTable = std::map<std::pair<std::string, int>, double>;

class TableScorer : public ScorerSource {
 public:
  explicit TableScorer(ScoreTable table) : table_(std::move(table)) {}
  std::optional<double> segment_score(const std::string& video_id,
                                      int segment_index) const override;

 private:
  ScoreTable table_;
};

class ConstantScorer : public ScorerSource {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  std::optional<double> segment_score(const std::string&, int) const override {
    return value_;
  }

 private:
  double value_;
};

// Derives labels at `threshold`. Missing, NaN, or out-of-range scores are
// hard errors; upstream scorer bugs should surface, not be clamped away.
ScoredTimeline attach_scores(const SegmentTimeline& timeline, const ScorerSource& source,
                             double threshold = kDefaultLabelThreshold);

// Scores file: one JSON object per line,
//   {"video_id": str, "segment": int, "score": float}
// Duplicate (video_id, segment) keys are rejected.
ScoreTable load_scores(std::istream& in);
void serialize_scores(const ScoreTable& table, std::ostream& out);

}  // namespace vadkit
