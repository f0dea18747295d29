#include <doctest.h>

#include <json.hpp>
#include <map>
#include <set>

#include "vadkit/benchmark.hpp"
#include "vadkit/common.hpp"

using namespace vadkit;

namespace {

ScoredTimeline make_scored(const std::string& id, const std::vector<std::int64_t>& lengths,
                           const std::vector<double>& values) {
  ScoredTimeline st;
  st.timeline.video.video_id = id;
  std::int64_t pos = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    st.timeline.segments.push_back(Segment{static_cast<int>(i), pos, pos + lengths[i] - 1});
    pos += lengths[i];
    st.scores.push_back(SegmentScore{static_cast<int>(i), values[i]});
    st.labels.push_back(values[i] >= 0.5 ? 1 : 0);
  }
  st.timeline.video.frame_count = pos;
  return st;
}

// Fails every n-th sample.
class FlakyGenerator : public QaGenerator {
 public:
  explicit FlakyGenerator(int every) : every_(every) {}
  std::optional<QaText> generate(const MediaRef& media, QuestionType type,
                                 const QaContext& context) override {
    if (++calls_ % every_ == 0) return std::nullopt;
    return template_qa(media, type, context);
  }

 private:
  int every_;
  int calls_ = 0;
};

}  // namespace

TEST_CASE("question types: ten stable names") {
  std::set<std::string> names;
  for (int i = 0; i < kQuestionTypeCount; ++i) {
    const auto type = static_cast<QuestionType>(i);
    const std::string name(question_type_name(type));
    CHECK(question_type_from_name(name) == type);
    names.insert(name);
  }
  CHECK(names.size() == 10);
  CHECK_THROWS_AS(question_type_from_name("essay"), ValidationError);
}

TEST_CASE("template_qa: label-derived and schema-forced answers") {
  const MediaRef media = FrameRef{"v", 3};
  auto qa = template_qa(media, QuestionType::kAnomalyDetection, {1, 0.9});
  CHECK(qa.question == "Does this scene appear to be abnormal?");
  CHECK(qa.answer == "yes");
  qa = template_qa(media, QuestionType::kAnomalyDetection, {0, 0.1});
  CHECK(qa.answer == "no");
  qa = template_qa(media, QuestionType::kTrueFalse, {0, 0.2});
  CHECK(qa.answer == "no");
  qa = template_qa(media, QuestionType::kMultipleChoice, {1, 0.8});
  REQUIRE(qa.options.size() == 4);
  CHECK(qa.answer == qa.options[0]);
  qa = template_qa(media, QuestionType::kShortAnswer, {1, 0.8});
  CHECK(!qa.answer.empty());
}

TEST_CASE("build_image_manifest: heuristic sample counts") {
  TemplateQaGenerator gen;
  const std::vector<ScoredTimeline> corpus{make_scored("v1", {50, 50}, {0.9, 0.2})};
  const auto manifest = build_image_manifest(corpus, gen, 0);
  CHECK(manifest.kind == "image");
  CHECK(manifest.samples.size() == 4);  // 3 abnormal + 1 normal
  CHECK(manifest.scoring_tasks.empty());

  const std::vector<ScoredTimeline> normal{make_scored("v1", {10, 10, 10}, {0.1, 0.2, 0.3})};
  CHECK(build_image_manifest(normal, gen, 0).samples.size() == 3);

  CHECK(build_image_manifest({}, gen, 0).samples.empty());
}

TEST_CASE("build_image_manifest: size law over a corpus") {
  TemplateQaGenerator gen;
  Rng rng(31);
  std::vector<ScoredTimeline> corpus;
  std::size_t expected = 0;
  for (int v = 0; v < 12; ++v) {
    const std::size_t m = 1 + rng.next_below(6);
    std::vector<std::int64_t> lengths(m);
    std::vector<double> values(m);
    for (std::size_t i = 0; i < m; ++i) {
      lengths[i] = 1 + static_cast<std::int64_t>(rng.next_below(7));
      values[i] = rng.next_unit();
      expected += values[i] >= 0.5 ? static_cast<std::size_t>(std::min<std::int64_t>(3, lengths[i]))
                                   : std::size_t{1};
    }
    corpus.push_back(make_scored("v" + std::to_string(v), lengths, values));
  }
  const auto manifest = build_image_manifest(corpus, gen, 5);
  CHECK(manifest.samples.size() == expected);
  manifest.validate();
}

TEST_CASE("build_video_manifest: per-segment samples plus one scoring task") {
  TemplateQaGenerator gen;
  const std::vector<ScoredTimeline> corpus{make_scored("v1", {10, 10, 10}, {0.9, 0.2, 0.4})};
  const auto manifest = build_video_manifest(corpus, gen, 1, 0);
  CHECK(manifest.kind == "video");
  CHECK(manifest.samples.size() == 3);
  REQUIRE(manifest.scoring_tasks.size() == 1);
  CHECK(manifest.scoring_tasks[0].target == 0.9);  // max aggregation
  for (const auto& sample : manifest.samples) {
    CHECK(std::holds_alternative<SegmentRef>(sample.media));
  }

  const auto two = build_video_manifest(corpus, gen, 2, 0);
  CHECK(two.samples.size() == 6);
  CHECK_THROWS_AS(build_video_manifest(corpus, gen, 0, 0), ValidationError);
}

TEST_CASE("round-robin assignment keeps type counts within one") {
  TemplateQaGenerator gen;
  const std::vector<ScoredTimeline> corpus{
      make_scored("v1", std::vector<std::int64_t>(25, 4), std::vector<double>(25, 0.3))};
  const auto manifest = build_video_manifest(corpus, gen, 1, 7);
  REQUIRE(manifest.samples.size() == 25);
  std::map<QuestionType, int> histogram;
  for (const auto& sample : manifest.samples) ++histogram[sample.type];
  int lo = 25, hi = 0;
  for (int i = 0; i < kQuestionTypeCount; ++i) {
    const int c = histogram[static_cast<QuestionType>(i)];
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi - lo <= 1);
}

TEST_CASE("generator failures are skipped and counted") {
  FlakyGenerator gen(4);
  const std::vector<ScoredTimeline> corpus{make_scored("v1", {10, 10, 10}, {0.9, 0.9, 0.9})};
  // 9 attempts, every 4th fails -> 2 skipped
  const auto manifest = build_image_manifest(corpus, gen, 0);
  CHECK(manifest.samples.size() == 7);
  CHECK(manifest.provenance.skipped == 2);
}

TEST_CASE("manifest round-trips through its serialization") {
  TemplateQaGenerator gen;
  const std::vector<ScoredTimeline> corpus{make_scored("v1", {50, 50}, {0.9, 0.2}),
                                           make_scored("v2", {30, 30, 30}, {0.4, 0.6, 0.5})};
  for (const auto& manifest :
       {build_image_manifest(corpus, gen, 3),
        build_video_manifest(corpus, gen, 2, 3, {Aggregator::kMean, 3})}) {
    const std::string text = serialize_manifest(manifest);
    const BenchmarkManifest parsed = parse_manifest(text);
    CHECK(parsed == manifest);
    CHECK(serialize_manifest(parsed) == text);
  }
}

TEST_CASE("manifest determinism: same corpus and seed, identical content") {
  TemplateQaGenerator gen;
  const std::vector<ScoredTimeline> corpus{make_scored("v1", {50, 50}, {0.9, 0.2})};
  auto a = build_image_manifest(corpus, gen, 11);
  auto b = build_image_manifest(corpus, gen, 11);
  a.provenance.created_at.clear();
  b.provenance.created_at.clear();
  CHECK(serialize_manifest(a) == serialize_manifest(b));

  const auto c = build_image_manifest(corpus, gen, 12);
  CHECK(c.samples[0].type != a.samples[0].type);  // rotation moved
}

TEST_CASE("manifest validation rejects contract violations") {
  TemplateQaGenerator gen;
  const std::vector<ScoredTimeline> corpus{make_scored("v1", {50, 50}, {0.9, 0.2})};
  auto manifest = build_image_manifest(corpus, gen, 0);

  auto broken = manifest;
  broken.samples[1].sample_id = broken.samples[0].sample_id;
  CHECK_THROWS_WITH_AS(broken.validate(), doctest::Contains("duplicate sample_id"),
                       ValidationError);

  broken = manifest;
  broken.scoring_tasks.push_back({"t", "v1", 0.5});
  CHECK_THROWS_AS(broken.validate(), ValidationError);

  broken = manifest;
  for (auto& sample : broken.samples) {
    if (sample.type == QuestionType::kMultipleChoice) sample.text.options.pop_back();
  }
  CHECK_THROWS_AS(broken.validate(), ValidationError);

  broken = manifest;
  broken.kind = "audio";
  CHECK_THROWS_AS(broken.validate(), ValidationError);
}

TEST_CASE("remote generator wire contract") {
  const MediaRef media = SegmentRef{"v9", 2, 20, 29};
  const std::string request =
      remote_qa_request_json(media, QuestionType::kCrimeTypeMatching, {1, 0.77});
  const auto parsed = nlohmann::json::parse(request);
  CHECK(parsed["media"]["kind"] == "segment");
  CHECK(parsed["media"]["video_id"] == "v9");
  CHECK(parsed["media"]["segment"] == 2);
  CHECK(parsed["question_type"] == "crime_type_matching");
  CHECK(parsed["context"]["label"] == 1);
  CHECK(parsed["context"]["score"] == 0.77);

  const QaText text = parse_remote_qa_response(
      R"({"question":"What crime is shown?","options":["theft","arson","assault","none"],"answer":"theft"})");
  CHECK(text.question == "What crime is shown?");
  REQUIRE(text.options.size() == 4);
  CHECK(text.answer == "theft");

  CHECK_THROWS_AS(parse_remote_qa_response("{}"), ValidationError);
  CHECK_THROWS_AS(parse_remote_qa_response("not json"), ValidationError);
  CHECK_THROWS_AS(parse_remote_qa_response(R"({"question":"","answer":""})"), ValidationError);
}
