#include "vadkit/benchmark.hpp"

#include <algorithm>
#include <ctime>
#include <set>

#include <json.hpp>

#include "vadkit/allocation.hpp"
#include "vadkit/common.hpp"

namespace vadkit {

using nlohmann::json;

namespace {

struct TypeInfo {
  QuestionType type;
  std::string_view name;
  std::string_view question;
};

// Question text per type; the templater emits these verbatim.
constexpr TypeInfo kTypes[kQuestionTypeCount] = {
    {QuestionType::kMultipleChoice, "multiple_choice", "What is this person doing?"},
    {QuestionType::kTrueFalse, "true_false", "Was this scene captured in a restricted area?"},
    {QuestionType::kShortAnswer, "short_answer",
     "What should the security officer do in this situation?"},
    {QuestionType::kActionClassification, "action_classification",
     "What is the person in the red shirt doing?"},
    {QuestionType::kObjectExistence, "object_existence",
     "Is there a firearm visible in the frame?"},
    {QuestionType::kSpatialReasoning, "spatial_reasoning",
     "Is the person located on the left side of the frame?"},
    {QuestionType::kAnomalyDetection, "anomaly_detection",
     "Does this scene appear to be abnormal?"},
    {QuestionType::kCrimeTypeMatching, "crime_type_matching",
     "If abnormal, what type of crime does this indicate?"},
    {QuestionType::kTemporalReasoning, "temporal_reasoning",
     "Was this scene captured during nighttime hours?"},
    {QuestionType::kSecurityResponse, "security_response",
     "What is the most appropriate security response in this situation?"},
};

const TypeInfo& type_info(QuestionType t) {
  for (const TypeInfo& info : kTypes) {
    if (info.type == t) return info;
  }
  throw std::logic_error("unknown question type");
}

std::string now_utc_iso8601() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

json media_to_json(const MediaRef& media) {
  json j;
  if (const auto* f = std::get_if<FrameRef>(&media)) {
    j["kind"] = "frame";
    j["video_id"] = f->video_id;
    j["frame"] = f->frame;
  } else {
    const auto& s = std::get<SegmentRef>(media);
    j["kind"] = "segment";
    j["video_id"] = s.video_id;
    j["segment"] = s.segment;
    j["start"] = s.start;
    j["end"] = s.end;
  }
  return j;
}

MediaRef media_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "frame") {
    return FrameRef{j.at("video_id").get<std::string>(), j.at("frame").get<std::int64_t>()};
  }
  if (kind == "segment") {
    return SegmentRef{j.at("video_id").get<std::string>(), j.at("segment").get<int>(),
                      j.at("start").get<std::int64_t>(), j.at("end").get<std::int64_t>()};
  }
  throw ValidationError("unknown media kind \"" + kind + "\"");
}

}  // namespace

std::string_view question_type_name(QuestionType t) { return type_info(t).name; }

QuestionType question_type_from_name(std::string_view name) {
  for (const TypeInfo& info : kTypes) {
    if (info.name == name) return info.type;
  }
  throw ValidationError("unknown question type \"" + std::string(name) + "\"");
}

QaText template_qa(const MediaRef&, QuestionType type, const QaContext& context) {
  QaText text;
  text.question = std::string(type_info(type).question);
  switch (type) {
    case QuestionType::kAnomalyDetection:
    case QuestionType::kTrueFalse:
      text.answer = context.label ? "yes" : "no";
      break;
    case QuestionType::kMultipleChoice:
      text.options = {"standing still", "walking", "running", "interacting with an object"};
      text.answer = text.options.front();
      break;
    default:
      text.answer = "unspecified";
      break;
  }
  return text;
}

std::string remote_qa_request_json(const MediaRef& media, QuestionType type,
                                   const QaContext& context) {
  json j;
  j["media"] = media_to_json(media);
  j["question_type"] = std::string(question_type_name(type));
  j["context"]["label"] = context.label;
  j["context"]["score"] = context.score;
  return j.dump();
}

QaText parse_remote_qa_response(const std::string& json_text) {
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed QA response");
  try {
    QaText text;
    text.question = j.at("question").get<std::string>();
    if (j.contains("options")) text.options = j["options"].get<std::vector<std::string>>();
    text.answer = j.at("answer").get<std::string>();
    if (text.question.empty() || text.answer.empty()) {
      throw ValidationError("QA response has empty question or answer");
    }
    return text;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed QA response: ") + e.what());
  }
}

void BenchmarkManifest::validate() const {
  if (kind != "image" && kind != "video") {
    throw ValidationError("manifest kind must be \"image\" or \"video\"");
  }
  if (kind == "image" && !scoring_tasks.empty()) {
    throw ValidationError("image manifest cannot carry scoring tasks");
  }
  std::set<std::string> ids;
  std::set<std::pair<std::string, std::int64_t>> frames_seen;
  for (const QASample& sample : samples) {
    if (!ids.insert(sample.sample_id).second) {
      throw ValidationError("duplicate sample_id \"" + sample.sample_id + "\"");
    }
    const bool is_frame = std::holds_alternative<FrameRef>(sample.media);
    if (kind == "image" && !is_frame) {
      throw ValidationError("image manifest requires frame media");
    }
    if (kind == "video" && is_frame) {
      throw ValidationError("video manifest requires segment media");
    }
    if (is_frame) {
      const auto& f = std::get<FrameRef>(sample.media);
      if (!frames_seen.insert({f.video_id, f.frame}).second) {
        throw ValidationError("duplicate frame sample for video \"" + f.video_id + "\" frame " +
                              std::to_string(f.frame));
      }
    }
    if (sample.type == QuestionType::kMultipleChoice) {
      if (sample.text.options.size() != 4) {
        throw ValidationError("multiple-choice sample needs exactly 4 options");
      }
      if (std::find(sample.text.options.begin(), sample.text.options.end(), sample.text.answer) ==
          sample.text.options.end()) {
        throw ValidationError("multiple-choice answer not among the options");
      }
    } else if (!sample.text.options.empty()) {
      throw ValidationError("options are for multiple-choice samples only");
    }
    if (sample.type == QuestionType::kTrueFalse &&
        sample.text.answer != "yes" && sample.text.answer != "no") {
      throw ValidationError("true/false answer must be yes or no");
    }
    if (!(sample.anomaly_score >= 0.0 && sample.anomaly_score <= 1.0)) {
      throw ValidationError("sample anomaly_score out of range");
    }
  }
  for (const AbnormalityScoringTask& task : scoring_tasks) {
    if (!ids.insert(task.sample_id).second) {
      throw ValidationError("duplicate sample_id \"" + task.sample_id + "\"");
    }
    if (!(task.target >= 0.0 && task.target <= 1.0)) {
      throw ValidationError("scoring target out of range");
    }
  }
}

namespace {

struct RoundRobin {
  std::size_t position;
  explicit RoundRobin(std::uint64_t seed) : position(seed % kQuestionTypeCount) {}
  QuestionType next() {
    const QuestionType t = kTypes[position % kQuestionTypeCount].type;
    ++position;
    return t;
  }
};

}  // namespace

BenchmarkManifest build_image_manifest(std::span<const ScoredTimeline> corpus,
                                       QaGenerator& generator, std::uint64_t seed) {
  BenchmarkManifest manifest;
  manifest.kind = "image";
  RoundRobin types(seed);
  for (const ScoredTimeline& scored : corpus) {
    const SegmentTimeline& timeline = scored.timeline;
    const std::vector<std::int64_t> counts = heuristic_extract(scored);
    const std::vector<std::int64_t> frames =
        select_frames(counts, timeline, SelectionMode::kEvenlySpaced, seed);
    for (std::int64_t frame : frames) {
      const int seg = timeline.segment_of(frame);
      const QaContext context{scored.labels[seg], scored.scores[seg].score};
      const QuestionType type = types.next();
      const MediaRef media = FrameRef{timeline.video.video_id, frame};
      const auto text = generator.generate(media, type, context);
      if (!text) {
        ++manifest.provenance.skipped;
        continue;
      }
      QASample sample;
      sample.sample_id = timeline.video.video_id + ":s" + std::to_string(seg) + ":f" +
                         std::to_string(frame) + ":" + std::string(question_type_name(type));
      sample.media = media;
      sample.type = type;
      sample.text = *text;
      sample.anomaly_score = context.score;
      sample.label = context.label;
      manifest.samples.push_back(std::move(sample));
    }
  }
  manifest.provenance.seed = seed;
  manifest.provenance.threshold =
      corpus.empty() ? kDefaultLabelThreshold : corpus.front().threshold;
  manifest.provenance.generator = "template";
  manifest.provenance.tool_version = kToolVersion;
  manifest.provenance.created_at = now_utc_iso8601();
  manifest.validate();
  return manifest;
}

BenchmarkManifest build_video_manifest(std::span<const ScoredTimeline> corpus,
                                       QaGenerator& generator, int samples_per_segment,
                                       std::uint64_t seed, const AggregatorSpec& agg) {
  if (samples_per_segment < 1) throw ValidationError("samples_per_segment must be >= 1");
  BenchmarkManifest manifest;
  manifest.kind = "video";
  RoundRobin types(seed);
  for (const ScoredTimeline& scored : corpus) {
    const SegmentTimeline& timeline = scored.timeline;
    for (const Segment& seg : timeline.segments) {
      for (int k = 0; k < samples_per_segment; ++k) {
        const QaContext context{scored.labels[seg.index], scored.scores[seg.index].score};
        const QuestionType type = types.next();
        const MediaRef media =
            SegmentRef{timeline.video.video_id, seg.index, seg.start, seg.end};
        const auto text = generator.generate(media, type, context);
        if (!text) {
          ++manifest.provenance.skipped;
          continue;
        }
        QASample sample;
        sample.sample_id = timeline.video.video_id + ":s" + std::to_string(seg.index) + ":q" +
                           std::to_string(k) + ":" + std::string(question_type_name(type));
        sample.media = media;
        sample.type = type;
        sample.text = *text;
        sample.anomaly_score = context.score;
        sample.label = context.label;
        manifest.samples.push_back(std::move(sample));
      }
    }
    AbnormalityScoringTask task;
    task.sample_id = timeline.video.video_id + ":score";
    task.video_id = timeline.video.video_id;
    task.target = aggregate_scores(scored.score_values(), agg);
    manifest.scoring_tasks.push_back(std::move(task));
  }
  manifest.provenance.seed = seed;
  manifest.provenance.threshold =
      corpus.empty() ? kDefaultLabelThreshold : corpus.front().threshold;
  manifest.provenance.samples_per_segment = samples_per_segment;
  manifest.provenance.aggregator = agg.to_string();
  manifest.provenance.generator = "template";
  manifest.provenance.tool_version = kToolVersion;
  manifest.provenance.created_at = now_utc_iso8601();
  manifest.validate();
  return manifest;
}

std::string serialize_manifest(const BenchmarkManifest& manifest) {
  json j;
  j["kind"] = manifest.kind;
  j["samples"] = json::array();
  for (const QASample& sample : manifest.samples) {
    json s;
    s["sample_id"] = sample.sample_id;
    s["media"] = media_to_json(sample.media);
    s["question_type"] = std::string(question_type_name(sample.type));
    s["question"] = sample.text.question;
    if (!sample.text.options.empty()) s["options"] = sample.text.options;
    s["answer"] = sample.text.answer;
    s["anomaly_score"] = sample.anomaly_score;
    s["label"] = sample.label;
    j["samples"].push_back(std::move(s));
  }
  j["scoring_tasks"] = json::array();
  for (const AbnormalityScoringTask& task : manifest.scoring_tasks) {
    json t;
    t["sample_id"] = task.sample_id;
    t["video_id"] = task.video_id;
    t["target"] = task.target;
    j["scoring_tasks"].push_back(std::move(t));
  }
  const ManifestProvenance& prov = manifest.provenance;
  j["provenance"]["seed"] = prov.seed;
  j["provenance"]["threshold"] = prov.threshold;
  if (manifest.kind == "video") {
    j["provenance"]["samples_per_segment"] = prov.samples_per_segment;
    j["provenance"]["aggregator"] = prov.aggregator;
  }
  j["provenance"]["generator"] = prov.generator;
  j["provenance"]["tool_version"] = prov.tool_version;
  j["provenance"]["created_at"] = prov.created_at;
  j["provenance"]["skipped"] = prov.skipped;
  return j.dump(2) + "\n";
}

BenchmarkManifest parse_manifest(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed manifest");
  try {
    BenchmarkManifest manifest;
    manifest.kind = j.at("kind").get<std::string>();
    for (const json& s : j.at("samples")) {
      QASample sample;
      sample.sample_id = s.at("sample_id").get<std::string>();
      sample.media = media_from_json(s.at("media"));
      sample.type = question_type_from_name(s.at("question_type").get<std::string>());
      sample.text.question = s.at("question").get<std::string>();
      if (s.contains("options")) sample.text.options = s["options"].get<std::vector<std::string>>();
      sample.text.answer = s.at("answer").get<std::string>();
      sample.anomaly_score = s.at("anomaly_score").get<double>();
      sample.label = s.at("label").get<int>();
      manifest.samples.push_back(std::move(sample));
    }
    for (const json& t : j.at("scoring_tasks")) {
      AbnormalityScoringTask task;
      task.sample_id = t.at("sample_id").get<std::string>();
      task.video_id = t.at("video_id").get<std::string>();
      task.target = t.at("target").get<double>();
      manifest.scoring_tasks.push_back(std::move(task));
    }
    const json& prov = j.at("provenance");
    manifest.provenance.seed = prov.at("seed").get<std::uint64_t>();
    manifest.provenance.threshold = prov.at("threshold").get<double>();
    manifest.provenance.samples_per_segment = prov.value("samples_per_segment", 0);
    manifest.provenance.aggregator = prov.value("aggregator", "");
    manifest.provenance.generator = prov.at("generator").get<std::string>();
    manifest.provenance.tool_version = prov.at("tool_version").get<std::string>();
    manifest.provenance.created_at = prov.at("created_at").get<std::string>();
    manifest.provenance.skipped = prov.at("skipped").get<std::int64_t>();
    manifest.validate();
    return manifest;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace vadkit
