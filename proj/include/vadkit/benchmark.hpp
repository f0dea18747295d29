#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vadkit/evaluation.hpp"
#include "vadkit/scoring.hpp"

namespace vadkit {

enum class QuestionType {
  kMultipleChoice,
  kTrueFalse,
  kShortAnswer,
  kActionClassification,
  kObjectExistence,
  kSpatialReasoning,
  kAnomalyDetection,
  kCrimeTypeMatching,
  kTemporalReasoning,
  kSecurityResponse,
};

inline constexpr int kQuestionTypeCount = 10;

std::string_view question_type_name(QuestionType t);
QuestionType question_type_from_name(std::string_view name);

struct FrameRef {
  std::string video_id;
  std::int64_t frame = 0;
  bool operator==(const FrameRef&) const = default;
};

struct SegmentRef {
  std::string video_id;
  int segment = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool operator==(const SegmentRef&) const = default;
};

using MediaRef = std::variant<FrameRef, SegmentRef>;

struct QaContext {
  int label = 0;       // abnormal/normal
  double score = 0.0;  // segment anomaly score
};

struct QaText {
  std::string question;
  std::vector<std::string> options;  // MultipleChoice only, exactly 4
  std::string answer;
  bool operator==(const QaText&) const = default;
};

// Produces question/answer text for one sample. Returning nullopt marks the
// sample as failed; the builders skip it and report the count.
class QaGenerator {
 public:
  virtual ~QaGenerator() = default;
  virtual std::optional<QaText> generate(const MediaRef& media, QuestionType type,
                                         const QaContext& context) = 0;
};

// Deterministic per-type templates, so the pipeline runs with no external
// service. AnomalyDetection and TrueFalse answers come from the label.
QaText template_qa(const MediaRef& media, QuestionType type, const QaContext& context);

class TemplateQaGenerator : public QaGenerator {
 public:
  std::optional<QaText> generate(const MediaRef& media, QuestionType type,
                                 const QaContext& context) override {
    return template_qa(media, type, context);
  }
};

// Wire contract for a remote teacher-model generator. Only the JSON shapes
// are defined here; no transport is bundled.
std::string remote_qa_request_json(const MediaRef& media, QuestionType type,
                                   const QaContext& context);
QaText parse_remote_qa_response(const std::string& json_text);

struct QASample {
  std::string sample_id;
  MediaRef media;
  QuestionType type = QuestionType::kMultipleChoice;
  QaText text;
  double anomaly_score = 0.0;
  int label = 0;

  bool operator==(const QASample&) const = default;
};

// Video-level task asking for a continuous abnormality score in [0, 1].
struct AbnormalityScoringTask {
  std::string sample_id;
  std::string video_id;
  double target = 0.0;

  bool operator==(const AbnormalityScoringTask&) const = default;
};

struct ManifestProvenance {
  std::uint64_t seed = 0;
  double threshold = kDefaultLabelThreshold;
  int samples_per_segment = 0;  // video kind only
  std::string aggregator;       // video kind only
  std::string generator;
  std::string tool_version;
  std::string created_at;  // excluded from determinism comparisons
  std::int64_t skipped = 0;

  bool operator==(const ManifestProvenance&) const = default;
};

struct BenchmarkManifest {
  std::string kind;  // "image" | "video"
  std::vector<QASample> samples;
  std::vector<AbnormalityScoringTask> scoring_tasks;  // video kind only
  ManifestProvenance provenance;

  void validate() const;
  bool operator==(const BenchmarkManifest&) const = default;
};

// Image-level manifest: per segment, heuristic_extract() frames selected
// evenly spaced, one QA sample per frame, question types round-robin with a
// seed-derived starting offset.
BenchmarkManifest build_image_manifest(std::span<const ScoredTimeline> corpus,
                                       QaGenerator& generator, std::uint64_t seed);

// Video-level manifest: samples_per_segment QA samples per segment plus one
// abnormality-scoring task per video, target = aggregate of segment scores.
BenchmarkManifest build_video_manifest(std::span<const ScoredTimeline> corpus,
                                       QaGenerator& generator, int samples_per_segment,
                                       std::uint64_t seed,
                                       const AggregatorSpec& agg = AggregatorSpec{});

std::string serialize_manifest(const BenchmarkManifest& manifest);
BenchmarkManifest parse_manifest(const std::string& text);

}  // namespace vadkit
