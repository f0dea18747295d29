#include "vadkit/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vadkit/common.hpp"
#include "vadkit/evaluation.hpp"
#include "vadkit/scoring.hpp"

namespace vadkit {

using nlohmann::json;

void CorpusSpec::validate() const {
  if (video_count < 0) throw ValidationError("video_count must be >= 0");
  if (frame_count_min < 1 || frame_count_max < frame_count_min) {
    throw ValidationError("frame_count range is empty or invalid");
  }
  if (segment_length_min < 1 || segment_length_max < segment_length_min) {
    throw ValidationError("segment_length range is empty or invalid");
  }
  if (segment_length_min > frame_count_max) {
    throw ValidationError("segment length range exceeds frame counts");
  }
  if (!(abnormal_video_fraction >= 0.0 && abnormal_video_fraction <= 1.0)) {
    throw ValidationError("abnormal_video_fraction must be in [0, 1]");
  }
  if (!(abnormal_interval_fraction > 0.0 && abnormal_interval_fraction <= 1.0)) {
    throw ValidationError("abnormal_interval_fraction must be in (0, 1]");
  }
  if (!(scorer_noise_sigma >= 0.0)) throw ValidationError("scorer_noise_sigma must be >= 0");
}

std::string serialize_corpus_spec(const CorpusSpec& spec) {
  json j;
  j["video_count"] = spec.video_count;
  j["frame_count_range"] = {spec.frame_count_min, spec.frame_count_max};
  j["segment_length_range"] = {spec.segment_length_min, spec.segment_length_max};
  j["abnormal_video_fraction"] = spec.abnormal_video_fraction;
  j["abnormal_interval_fraction"] = spec.abnormal_interval_fraction;
  j["scorer_noise_sigma"] = spec.scorer_noise_sigma;
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

CorpusSpec parse_corpus_spec(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed corpus spec");
  try {
    CorpusSpec spec;
    spec.video_count = j.at("video_count").get<std::int64_t>();
    spec.frame_count_min = j.at("frame_count_range").at(0).get<std::int64_t>();
    spec.frame_count_max = j.at("frame_count_range").at(1).get<std::int64_t>();
    spec.segment_length_min = j.at("segment_length_range").at(0).get<std::int64_t>();
    spec.segment_length_max = j.at("segment_length_range").at(1).get<std::int64_t>();
    spec.abnormal_video_fraction = j.at("abnormal_video_fraction").get<double>();
    spec.abnormal_interval_fraction = j.at("abnormal_interval_fraction").get<double>();
    spec.scorer_noise_sigma = j.at("scorer_noise_sigma").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed corpus spec: ") + e.what());
  }
}

std::vector<SimVideo> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const auto count = static_cast<std::size_t>(spec.video_count);

  // Which videos carry an anomaly: a seeded shuffle, first k slots win.
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(mix_seed(spec.seed, "abnormal-set", 0));
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
  }
  const auto abnormal_count = static_cast<std::size_t>(
      std::llround(spec.abnormal_video_fraction * static_cast<double>(count)));
  std::vector<bool> abnormal(count, false);
  for (std::size_t i = 0; i < abnormal_count && i < count; ++i) abnormal[order[i]] = true;

  std::vector<SimVideo> corpus(count);
  for (std::size_t v = 0; v < count; ++v) {
    char name[32];
    std::snprintf(name, sizeof(name), "sim_%06zu", v);
    Rng rng(mix_seed(spec.seed, name, 1));

    SimVideo& video = corpus[v];
    video.timeline.video.video_id = name;
    const std::int64_t t =
        spec.frame_count_min +
        static_cast<std::int64_t>(rng.next_below(
            static_cast<std::uint64_t>(spec.frame_count_max - spec.frame_count_min + 1)));
    video.timeline.video.frame_count = t;

    std::int64_t pos = 0;
    int index = 0;
    while (pos < t) {
      const std::int64_t len =
          spec.segment_length_min +
          static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(
              spec.segment_length_max - spec.segment_length_min + 1)));
      const std::int64_t end = std::min(pos + len - 1, t - 1);
      video.timeline.segments.push_back(Segment{index++, pos, end});
      pos = end + 1;
    }
    video.timeline.validate();

    video.annotation.video_id = name;
    if (abnormal[v]) {
      const std::int64_t len = std::clamp<std::int64_t>(
          std::llround(spec.abnormal_interval_fraction * static_cast<double>(t)), 1, t);
      const std::int64_t start =
          static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(t - len + 1)));
      video.annotation.intervals.push_back(FrameInterval{start, start + len - 1});
    }
  }
  return corpus;
}

namespace {

double overlap_fraction(const Segment& seg, const AnomalyAnnotation& ann) {
  std::int64_t overlap = 0;
  for (const FrameInterval& iv : ann.intervals) {
    const std::int64_t lo = std::max(seg.start, iv.start);
    const std::int64_t hi = std::min(seg.end, iv.end);
    if (hi >= lo) overlap += hi - lo + 1;
  }
  return static_cast<double>(overlap) / static_cast<double>(seg.length());
}

}  // namespace

std::vector<double> noisy_scores(const SegmentTimeline& timeline,
                                 const AnomalyAnnotation& annotation, double sigma,
                                 std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  std::vector<double> scores;
  scores.reserve(timeline.segments.size());
  for (const Segment& seg : timeline.segments) {
    Rng rng(mix_seed(seed, timeline.video.video_id, static_cast<std::uint64_t>(seg.index)));
    const double noise = sigma > 0.0 ? sigma * rng.next_gaussian() : 0.0;
    scores.push_back(std::clamp(overlap_fraction(seg, annotation) + noise, 0.0, 1.0));
  }
  return scores;
}

SyntheticScorer::SyntheticScorer(std::vector<SimVideo> corpus, double sigma,
                                 std::uint64_t seed) {
  for (const SimVideo& video : corpus) {
    const auto values = noisy_scores(video.timeline, video.annotation, sigma, seed);
    for (std::size_t i = 0; i < values.size(); ++i) {
      table_[{video.timeline.video.video_id, static_cast<int>(i)}] = values[i];
    }
  }
}

std::optional<double> SyntheticScorer::segment_score(const std::string& video_id,
                                                     int segment_index) const {
  auto it = table_.find({video_id, segment_index});
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

double CoverageMetric::coverage() const {
  if (sampled_total <= 0) throw ValidationError("coverage undefined: no sampled frames");
  return static_cast<double>(sampled_abnormal) / static_cast<double>(sampled_total);
}

CoverageMetric coverage_of(std::span<const std::int64_t> frames,
                           const AnomalyAnnotation& annotation) {
  CoverageMetric metric;
  metric.sampled_total = static_cast<std::int64_t>(frames.size());
  for (std::int64_t f : frames) {
    for (const FrameInterval& iv : annotation.intervals) {
      if (f >= iv.start && f <= iv.end) {
        ++metric.sampled_abnormal;
        break;
      }
    }
  }
  return metric;
}

namespace {

ScoredTimeline scored_from_values(const SegmentTimeline& timeline,
                                  const std::vector<double>& values) {
  ScoredTimeline scored;
  scored.timeline = timeline;
  scored.threshold = kDefaultLabelThreshold;
  for (std::size_t i = 0; i < values.size(); ++i) {
    scored.scores.push_back(SegmentScore{static_cast<int>(i), values[i]});
    scored.labels.push_back(values[i] >= kDefaultLabelThreshold ? 1 : 0);
  }
  return scored;
}

struct RunningStats {
  std::vector<double> samples;
  void add(double x) { samples.push_back(x); }
  double mean() const {
    return std::accumulate(samples.begin(), samples.end(), 0.0) /
           static_cast<double>(samples.size());
  }
  double stddev() const {
    if (samples.size() < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double x : samples) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
};

}  // namespace

AblationReport run_ablation(const CorpusSpec& spec, std::span<const Strategy> strategies,
                            std::int64_t budget, double temperature, int repetitions) {
  spec.validate();
  if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
  if (strategies.empty()) throw ValidationError("no strategies to compare");
  if (budget < 1) throw ValidationError("budget must be >= 1");

  std::vector<RunningStats> coverage_stats(strategies.size());
  std::vector<RunningStats> auc_stats(strategies.size());

  for (int rep = 0; rep < repetitions; ++rep) {
    CorpusSpec rep_spec = spec;
    rep_spec.seed = mix_seed(spec.seed, "rep", static_cast<std::uint64_t>(rep));
    const std::vector<SimVideo> corpus = generate_corpus(rep_spec);

    std::vector<ScoredTimeline> scored;
    scored.reserve(corpus.size());
    for (const SimVideo& video : corpus) {
      scored.push_back(scored_from_values(
          video.timeline,
          noisy_scores(video.timeline, video.annotation, spec.scorer_noise_sigma,
                       mix_seed(rep_spec.seed, "scorer", 0))));
    }

    for (std::size_t s = 0; s < strategies.size(); ++s) {
      CoverageMetric pooled;
      std::vector<double> frame_scores;
      std::vector<int> frame_labels;
      for (std::size_t v = 0; v < corpus.size(); ++v) {
        const SimVideo& video = corpus[v];
        AllocationConfig config;
        config.strategy = strategies[s];
        config.temperature = temperature;
        // Keep the one-frame-per-segment guarantee on densely segmented
        // videos; every strategy gets the same per-video budget.
        config.budget = std::max<std::int64_t>(budget, video.timeline.segment_count());
        config.seed = mix_seed(rep_spec.seed, strategy_name(strategies[s]), 0);
        const AllocationPlan plan = make_plan(scored[v], config);
        pooled.add(coverage_of(plan.frames, video.annotation));
        for (std::int64_t frame : plan.frames) {
          frame_scores.push_back(scored[v].scores[video.timeline.segment_of(frame)].score);
          frame_labels.push_back(frame_label(video.annotation, frame,
                                             video.timeline.video.frame_count));
        }
      }
      coverage_stats[s].add(pooled.coverage());
      auc_stats[s].add(roc_auc(frame_scores, frame_labels));
    }
  }

  AblationReport report;
  report.spec = spec;
  report.budget = budget;
  report.temperature = temperature;
  report.repetitions = repetitions;
  report.tool_version = kToolVersion;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    AblationRow row;
    row.strategy = std::string(strategy_name(strategies[s]));
    row.coverage_mean = coverage_stats[s].mean();
    row.coverage_stddev = coverage_stats[s].stddev();
    row.frame_auc_mean = auc_stats[s].mean();
    row.frame_auc_stddev = auc_stats[s].stddev();
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string serialize_ablation_report(const AblationReport& report) {
  json j;
  j["spec"] = json::parse(serialize_corpus_spec(report.spec));
  j["budget"] = report.budget;
  j["temperature"] = report.temperature;
  j["repetitions"] = report.repetitions;
  j["rows"] = json::array();
  for (const AblationRow& row : report.rows) {
    json r;
    r["strategy"] = row.strategy;
    r["coverage_mean"] = row.coverage_mean;
    r["coverage_stddev"] = row.coverage_stddev;
    r["frame_auc_mean"] = row.frame_auc_mean;
    r["frame_auc_stddev"] = row.frame_auc_stddev;
    j["rows"].push_back(std::move(r));
  }
  j["tool_version"] = report.tool_version;
  return j.dump(2) + "\n";
}

AblationReport parse_ablation_report(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed ablation report");
  try {
    AblationReport report;
    report.spec = parse_corpus_spec(j.at("spec").dump());
    report.budget = j.at("budget").get<std::int64_t>();
    report.temperature = j.at("temperature").get<double>();
    report.repetitions = j.at("repetitions").get<int>();
    for (const json& r : j.at("rows")) {
      AblationRow row;
      row.strategy = r.at("strategy").get<std::string>();
      row.coverage_mean = r.at("coverage_mean").get<double>();
      row.coverage_stddev = r.at("coverage_stddev").get<double>();
      row.frame_auc_mean = r.at("frame_auc_mean").get<double>();
      row.frame_auc_stddev = r.at("frame_auc_stddev").get<double>();
      report.rows.push_back(std::move(row));
    }
    report.tool_version = j.at("tool_version").get<std::string>();
    return report;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ablation report: ") + e.what());
  }
}

std::string ablation_table(const AblationReport& report) {
  std::vector<std::array<std::string, 5>> lines;
  lines.push_back({"strategy", "coverage", "stddev", "frame_auc", "stddev"});
  for (const AblationRow& row : report.rows) {
    char cov[32], cov_sd[32], auc[32], auc_sd[32];
    std::snprintf(cov, sizeof(cov), "%.4f", row.coverage_mean);
    std::snprintf(cov_sd, sizeof(cov_sd), "%.4f", row.coverage_stddev);
    std::snprintf(auc, sizeof(auc), "%.4f", row.frame_auc_mean);
    std::snprintf(auc_sd, sizeof(auc_sd), "%.4f", row.frame_auc_stddev);
    lines.push_back({row.strategy, cov, cov_sd, auc, auc_sd});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& line : lines) {
    for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (const auto& line : lines) {
    for (std::size_t c = 0; c < 5; ++c) {
      out << line[c] << std::string(width[c] - line[c].size(), ' ') << (c + 1 < 5 ? "  " : "");
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace vadkit
