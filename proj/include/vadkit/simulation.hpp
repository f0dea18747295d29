#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vadkit/allocation.hpp"
#include "vadkit/scoring.hpp"
#include "vadkit/timeline.hpp"

namespace vadkit {

// Desk-scale synthetic corpus: planted one-interval anomalies plus a noisy
// overlap scorer, standing in for a real scored benchmark corpus.
struct CorpusSpec {
  std::int64_t video_count = 0;
  std::int64_t frame_count_min = 1;
  std::int64_t frame_count_max = 1;
  std::int64_t segment_length_min = 1;
  std::int64_t segment_length_max = 1;
  double abnormal_video_fraction = 0.0;
  double abnormal_interval_fraction = 0.1;  // of an abnormal video's frames
  double scorer_noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const CorpusSpec&) const = default;
};

std::string serialize_corpus_spec(const CorpusSpec& spec);
CorpusSpec parse_corpus_spec(const std::string& text);

struct SimVideo {
  SegmentTimeline timeline;
  AnomalyAnnotation annotation;

  bool operator==(const SimVideo&) const = default;
};

// Deterministic from spec.seed. Abnormal videos carry one contiguous
// abnormal interval of round(abnormal_interval_fraction * T) frames.
std::vector<SimVideo> generate_corpus(const CorpusSpec& spec);

// s_i = clamp(overlap_fraction(segment, abnormal intervals) + N(0, sigma), 0, 1)
std::vector<double> noisy_scores(const SegmentTimeline& timeline,
                                 const AnomalyAnnotation& annotation, double sigma,
                                 std::uint64_t seed);

// ScorerSource adapter over the noisy overlap scorer, for running the real
// scoring pipeline against planted ground truth.
class SyntheticScorer : public ScorerSource {
 public:
  SyntheticScorer(std::vector<SimVideo> corpus, double sigma, std::uint64_t seed);
  std::optional<double> segment_score(const std::string& video_id,
                                      int segment_index) const override;

 private:
  ScoreTable table_;
};

struct CoverageMetric {
  std::int64_t sampled_total = 0;
  std::int64_t sampled_abnormal = 0;

  // Defined only when sampled_total > 0.
  double coverage() const;
  void add(const CoverageMetric& other) {
    sampled_total += other.sampled_total;
    sampled_abnormal += other.sampled_abnormal;
  }
};

CoverageMetric coverage_of(std::span<const std::int64_t> frames,
                           const AnomalyAnnotation& annotation);

struct AblationRow {
  std::string strategy;
  double coverage_mean = 0.0;
  double coverage_stddev = 0.0;
  double frame_auc_mean = 0.0;
  double frame_auc_stddev = 0.0;

  bool operator==(const AblationRow&) const = default;
};

struct AblationReport {
  CorpusSpec spec;
  std::int64_t budget = 0;
  double temperature = 1.0;
  int repetitions = 0;
  std::vector<AblationRow> rows;
  std::string tool_version;

  bool operator==(const AblationReport&) const = default;
};

// Each repetition draws a fresh seed-derived corpus, scores it with the
// noisy scorer, samples frames under every strategy, and pools coverage and
// frame-level AUC over the corpus. Videos whose segment count exceeds the
// budget are allocated max(budget, M) frames under every strategy so the
// one-frame-per-segment guarantee survives and the comparison stays fair.
AblationReport run_ablation(const CorpusSpec& spec, std::span<const Strategy> strategies,
                            std::int64_t budget, double temperature, int repetitions);

std::string serialize_ablation_report(const AblationReport& report);
AblationReport parse_ablation_report(const std::string& text);
std::string ablation_table(const AblationReport& report);

}  // namespace vadkit
