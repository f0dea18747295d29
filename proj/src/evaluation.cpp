#include "vadkit/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vadkit/common.hpp"

namespace vadkit {

using nlohmann::json;

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  if (n == 0 || labels.size() != n) throw ValidationError("roc_auc: misaligned or empty input");
  std::int64_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(scores[i])) throw ValidationError("roc_auc: non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("roc_auc: labels must be 0 or 1");
    positives += labels[i];
  }
  const std::int64_t negatives = static_cast<std::int64_t>(n) - positives;
  if (positives == 0 || negatives == 0) {
    throw ValidationError("roc_auc undefined: input contains only one class");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midrank sum of positives; ties share the average of their rank block.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) positive_rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

std::string AggregatorSpec::to_string() const {
  switch (kind) {
    case Aggregator::kMax: return "max";
    case Aggregator::kMean: return "mean";
    case Aggregator::kTopK: return "topk:" + std::to_string(k);
  }
  throw std::logic_error("unknown aggregator");
}

AggregatorSpec AggregatorSpec::from_string(std::string_view text) {
  if (text == "max") return {Aggregator::kMax, 3};
  if (text == "mean") return {Aggregator::kMean, 3};
  if (text == "topk") return {Aggregator::kTopK, 3};
  if (text.rfind("topk:", 0) == 0) {
    const std::string digits(text.substr(5));
    try {
      std::size_t used = 0;
      const int k = std::stoi(digits, &used);
      if (used != digits.size() || k < 1) throw std::invalid_argument(digits);
      return {Aggregator::kTopK, k};
    } catch (const std::exception&) {
      throw ValidationError("bad top-k aggregator \"" + std::string(text) + "\"");
    }
  }
  throw ValidationError("unknown aggregator \"" + std::string(text) +
                        "\" (expected max, mean, or topk[:k])");
}

double aggregate_scores(std::span<const double> scores, const AggregatorSpec& agg) {
  if (scores.empty()) throw ValidationError("aggregate over empty segment set");
  switch (agg.kind) {
    case Aggregator::kMax:
      return *std::max_element(scores.begin(), scores.end());
    case Aggregator::kMean:
      return std::accumulate(scores.begin(), scores.end(), 0.0) /
             static_cast<double>(scores.size());
    case Aggregator::kTopK: {
      if (agg.k < 1) throw ValidationError("top-k aggregator needs k >= 1");
      std::vector<double> sorted(scores.begin(), scores.end());
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      const auto take = std::min<std::size_t>(sorted.size(), static_cast<std::size_t>(agg.k));
      return std::accumulate(sorted.begin(), sorted.begin() + take, 0.0) /
             static_cast<double>(take);
    }
  }
  throw std::logic_error("unknown aggregator");
}

FramePredictions load_frame_predictions(std::istream& in) {
  FramePredictions preds;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object() || !row.contains("video_id") ||
        !row["video_id"].is_string() || !row.contains("frame") ||
        !row["frame"].is_number_integer() || !row.contains("score") || !row["score"].is_number()) {
      throw ValidationError("malformed prediction row (line " + std::to_string(line_no) + ")");
    }
    const std::string video_id = row["video_id"].get<std::string>();
    const std::int64_t frame = row["frame"].get<std::int64_t>();
    const double score = row["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
      throw ValidationError("prediction score out of range (line " + std::to_string(line_no) + ")");
    }
    if (!preds.emplace(std::make_pair(video_id, frame), score).second) {
      throw ValidationError("duplicate prediction for (\"" + video_id + "\", " +
                            std::to_string(frame) + ") (line " + std::to_string(line_no) + ")");
    }
  }
  return preds;
}

void serialize_frame_predictions(const FramePredictions& preds, std::ostream& out) {
  for (const auto& [key, score] : preds) {
    json row;
    row["video_id"] = key.first;
    row["frame"] = key.second;
    row["score"] = score;
    out << row.dump() << '\n';
  }
}

AucResult frame_level_eval(const FramePredictions& predictions,
                           std::span<const FrameEvalItem> items) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const FrameEvalItem& item : items) {
    for (std::int64_t frame : item.frames) {
      auto it = predictions.find({item.video_id, frame});
      if (it == predictions.end()) {
        throw ValidationError("missing prediction for video \"" + item.video_id + "\" frame " +
                              std::to_string(frame));
      }
      scores.push_back(it->second);
      labels.push_back(frame_label(item.annotation, frame, item.frame_count));
    }
  }
  AucResult result;
  result.positives = std::accumulate(labels.begin(), labels.end(), std::int64_t{0});
  result.negatives = static_cast<std::int64_t>(labels.size()) - result.positives;
  result.auc = roc_auc(scores, labels);
  return result;
}

AucResult video_level_eval(const std::map<std::string, std::vector<double>>& segment_scores,
                           const std::map<std::string, int>& video_labels,
                           const AggregatorSpec& agg) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& [video_id, segs] : segment_scores) {
    if (segs.empty()) {
      throw ValidationError("no segment predictions for video \"" + video_id + "\"");
    }
    auto it = video_labels.find(video_id);
    if (it == video_labels.end()) {
      throw ValidationError("missing label for video \"" + video_id + "\"");
    }
    scores.push_back(aggregate_scores(segs, agg));
    labels.push_back(it->second);
  }
  AucResult result;
  result.positives = std::accumulate(labels.begin(), labels.end(), std::int64_t{0});
  result.negatives = static_cast<std::int64_t>(labels.size()) - result.positives;
  result.auc = roc_auc(scores, labels);
  return result;
}

namespace {

json row_to_json(const ReportRow& row) {
  json j;
  j["label"] = row.label;
  if (row.coverage) j["coverage"] = *row.coverage;
  if (row.frame_auc) j["frame_auc"] = *row.frame_auc;
  if (row.video_auc) j["video_auc"] = *row.video_auc;
  return j;
}

ReportRow row_from_json(const json& j) {
  ReportRow row;
  row.label = j.at("label").get<std::string>();
  if (j.contains("coverage")) row.coverage = j["coverage"].get<double>();
  if (j.contains("frame_auc")) row.frame_auc = j["frame_auc"].get<double>();
  if (j.contains("video_auc")) row.video_auc = j["video_auc"].get<double>();
  return row;
}

std::string format_cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

std::string serialize_report(const EvaluationReport& report) {
  json j;
  if (report.frame_auc) j["frame_auc"] = *report.frame_auc;
  if (report.video_auc) j["video_auc"] = *report.video_auc;
  j["counts"]["frame_positives"] = report.frame_positives;
  j["counts"]["frame_negatives"] = report.frame_negatives;
  j["counts"]["video_positives"] = report.video_positives;
  j["counts"]["video_negatives"] = report.video_negatives;
  j["rows"] = json::array();
  for (const ReportRow& row : report.rows) j["rows"].push_back(row_to_json(row));
  j["provenance"]["aggregator"] = report.aggregator;
  j["provenance"]["seed"] = report.seed;
  j["provenance"]["tool_version"] = report.tool_version;
  return j.dump(2) + "\n";
}

EvaluationReport parse_report(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed report");
  try {
    EvaluationReport report;
    if (j.contains("frame_auc")) report.frame_auc = j["frame_auc"].get<double>();
    if (j.contains("video_auc")) report.video_auc = j["video_auc"].get<double>();
    const json& counts = j.at("counts");
    report.frame_positives = counts.at("frame_positives").get<std::int64_t>();
    report.frame_negatives = counts.at("frame_negatives").get<std::int64_t>();
    report.video_positives = counts.at("video_positives").get<std::int64_t>();
    report.video_negatives = counts.at("video_negatives").get<std::int64_t>();
    for (const json& row : j.at("rows")) report.rows.push_back(row_from_json(row));
    const json& prov = j.at("provenance");
    report.aggregator = prov.at("aggregator").get<std::string>();
    report.seed = prov.at("seed").get<std::uint64_t>();
    report.tool_version = prov.at("tool_version").get<std::string>();
    return report;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

std::string report_table(const EvaluationReport& report) {
  std::vector<std::array<std::string, 4>> lines;
  lines.push_back({"configuration", "coverage", "frame_auc", "video_auc"});
  for (const ReportRow& row : report.rows) {
    lines.push_back({row.label, format_cell(row.coverage), format_cell(row.frame_auc),
                     format_cell(row.video_auc)});
  }
  if (report.rows.empty()) {
    lines.push_back({"overall", "-", format_cell(report.frame_auc), format_cell(report.video_auc)});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& line : lines) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (const auto& line : lines) {
    for (std::size_t c = 0; c < 4; ++c) {
      out << line[c] << std::string(width[c] - line[c].size(), ' ');
      out << (c + 1 < 4 ? "  " : "");
    }
    out << '\n';
  }
  return out.str();
}

std::vector<ReportRow> compare_strategies(std::span<const ScoredTimeline> corpus,
                                          const std::map<std::string, AnomalyAnnotation>& annotations,
                                          std::span<const Strategy> strategies,
                                          std::span<const AllocationConfig> grid) {
  if (corpus.empty()) throw ValidationError("no videos");
  if (strategies.empty()) throw ValidationError("no strategies to compare");
  if (grid.empty()) throw ValidationError("empty configuration grid");

  std::vector<ReportRow> rows;
  for (const AllocationConfig& base : grid) {
    for (Strategy strategy : strategies) {
      AllocationConfig config = base;
      config.strategy = strategy;

      std::int64_t sampled_total = 0;
      std::int64_t sampled_abnormal = 0;
      std::vector<double> frame_scores;
      std::vector<int> frame_labels;
      std::map<std::string, std::vector<double>> video_scores;
      std::map<std::string, int> video_labels;

      for (const ScoredTimeline& scored : corpus) {
        const std::string& video_id = scored.timeline.video.video_id;
        auto ann_it = annotations.find(video_id);
        if (ann_it == annotations.end()) {
          throw ValidationError("missing annotation for video \"" + video_id + "\"");
        }
        const AnomalyAnnotation& ann = ann_it->second;

        AllocationConfig per_video = config;
        per_video.budget = std::max<std::int64_t>(config.budget, scored.timeline.segment_count());
        const AllocationPlan plan = make_plan(scored, per_video);
        for (std::int64_t frame : plan.frames) {
          const int label = frame_label(ann, frame, scored.timeline.video.frame_count);
          ++sampled_total;
          sampled_abnormal += label;
          frame_scores.push_back(scored.scores[scored.timeline.segment_of(frame)].score);
          frame_labels.push_back(label);
        }
        video_scores[video_id] = scored.score_values();
        video_labels[video_id] = ann.intervals.empty() ? 0 : 1;
      }

      ReportRow row;
      char label[128];
      std::snprintf(label, sizeof(label), "%s N=%lld tau=%g",
                    std::string(strategy_name(strategy)).c_str(),
                    static_cast<long long>(config.budget), config.temperature);
      row.label = label;
      row.coverage = sampled_total > 0
                         ? static_cast<double>(sampled_abnormal) / static_cast<double>(sampled_total)
                         : 0.0;
      row.frame_auc = roc_auc(frame_scores, frame_labels);
      row.video_auc = video_level_eval(video_scores, video_labels, AggregatorSpec{}).auc;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace vadkit
