#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vadkit/allocation.hpp"
#include "vadkit/scoring.hpp"
#include "vadkit/timeline.hpp"

namespace vadkit {

struct AucResult {
  double auc = 0.0;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
};

// Mann-Whitney rank AUC with midranks for ties. Throws ValidationError when
// only one class is present; an undefined AUC must not masquerade as 0.5.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

enum class Aggregator { kMax, kMean, kTopK };

struct AggregatorSpec {
  Aggregator kind = Aggregator::kMax;
  int k = 3;  // top-k mean only

  std::string to_string() const;
  static AggregatorSpec from_string(std::string_view text);
  bool operator==(const AggregatorSpec&) const = default;
};

double aggregate_scores(std::span<const double> scores, const AggregatorSpec& agg);

// Frame-level predictions keyed by (video_id, frame index).
using FramePredictions = std::map<std::pair<std::string, std::int64_t>, double>;

// Predictions file, frame level: {"video_id": str, "frame": int, "score": float}
FramePredictions load_frame_predictions(std::istream& in);
void serialize_frame_predictions(const FramePredictions& preds, std::ostream& out);

// One video's contribution to the frame-level pool.
struct FrameEvalItem {
  std::string video_id;
  std::int64_t frame_count = 0;
  AnomalyAnnotation annotation;
  std::vector<std::int64_t> frames;  // the sampled set to evaluate
};

// Pools every sampled frame of every video into a single AUC. Every sampled
// frame must have a prediction.
AucResult frame_level_eval(const FramePredictions& predictions,
                           std::span<const FrameEvalItem> items);

// Aggregates segment-level predictions into one score per video, then AUC
// over videos against the binary video labels.
AucResult video_level_eval(const std::map<std::string, std::vector<double>>& segment_scores,
                           const std::map<std::string, int>& video_labels,
                           const AggregatorSpec& agg);

struct ReportRow {
  std::string label;
  std::optional<double> coverage;
  std::optional<double> frame_auc;
  std::optional<double> video_auc;

  bool operator==(const ReportRow&) const = default;
};

struct EvaluationReport {
  std::optional<double> frame_auc;
  std::optional<double> video_auc;
  std::int64_t frame_positives = 0;
  std::int64_t frame_negatives = 0;
  std::int64_t video_positives = 0;
  std::int64_t video_negatives = 0;
  std::vector<ReportRow> rows;
  std::string aggregator;  // provenance echo
  std::uint64_t seed = 0;
  std::string tool_version;

  bool operator==(const EvaluationReport&) const = default;
};

std::string serialize_report(const EvaluationReport& report);
EvaluationReport parse_report(const std::string& text);
// Aligned plain-text table of the report rows.
std::string report_table(const EvaluationReport& report);

// One row per (strategy, config): frames are sampled with that strategy,
// coverage is the fraction landing inside abnormal intervals, and frame AUC
// treats each sampled frame's segment score as its prediction.
std::vector<ReportRow> compare_strategies(std::span<const ScoredTimeline> corpus,
                                          const std::map<std::string, AnomalyAnnotation>& annotations,
                                          std::span<const Strategy> strategies,
                                          std::span<const AllocationConfig> grid);

}  // namespace vadkit
