#include "vadkit/scoring.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "vadkit/common.hpp"

namespace vadkit {

using nlohmann::json;

std::vector<double> ScoredTimeline::score_values() const {
  std::vector<double> values;
  values.reserve(scores.size());
  for (const SegmentScore& s : scores) values.push_back(s.score);
  return values;
}

std::optional<double> TableScorer::segment_score(const std::string& video_id,
                                                 int segment_index) const {
  auto it = table_.find({video_id, segment_index});
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

ScoredTimeline attach_scores(const SegmentTimeline& timeline, const ScorerSource& source,
                             double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("threshold must be in [0, 1]");
  }
  ScoredTimeline scored;
  scored.timeline = timeline;
  scored.threshold = threshold;
  for (const Segment& seg : timeline.segments) {
    const auto value = source.segment_score(timeline.video.video_id, seg.index);
    if (!value) {
      throw ValidationError("missing score for video \"" + timeline.video.video_id +
                            "\" segment " + std::to_string(seg.index));
    }
    if (std::isnan(*value)) {
      throw ValidationError("NaN score for video \"" + timeline.video.video_id + "\" segment " +
                            std::to_string(seg.index));
    }
    if (*value < 0.0 || *value > 1.0) {
      throw ValidationError("score " + std::to_string(*value) + " out of range for video \"" +
                            timeline.video.video_id + "\" segment " + std::to_string(seg.index));
    }
    scored.scores.push_back(SegmentScore{seg.index, *value});
    scored.labels.push_back(*value >= threshold ? 1 : 0);
  }
  return scored;
}

ScoreTable load_scores(std::istream& in) {
  ScoreTable table;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object() || !row.contains("video_id") ||
        !row["video_id"].is_string() || !row.contains("segment") ||
        !row["segment"].is_number_integer() || !row.contains("score") ||
        !row["score"].is_number()) {
      throw ValidationError("malformed score row (line " + std::to_string(line_no) + ")");
    }
    const std::string video_id = row["video_id"].get<std::string>();
    const int segment = row["segment"].get<int>();
    const double score = row["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
      throw ValidationError("score out of range for (\"" + video_id + "\", " +
                            std::to_string(segment) + ") (line " + std::to_string(line_no) + ")");
    }
    if (!table.emplace(std::make_pair(video_id, segment), score).second) {
      throw ValidationError("duplicate score for (\"" + video_id + "\", " +
                            std::to_string(segment) + ") (line " + std::to_string(line_no) + ")");
    }
  }
  return table;
}

void serialize_scores(const ScoreTable& table, std::ostream& out) {
  for (const auto& [key, score] : table) {
    json row;
    row["video_id"] = key.first;
    row["segment"] = key.second;
    row["score"] = score;
    out << row.dump() << '\n';
  }
}

}  // namespace vadkit
