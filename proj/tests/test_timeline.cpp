#include <doctest.h>

#include <sstream>

#include "vadkit/common.hpp"
#include "vadkit/timeline.hpp"

using namespace vadkit;

TEST_CASE("parse_timelines: minimal well-formed corpus") {
  std::istringstream in(
      R"({"video_id":"v1","frame_count":100,"segment":0,"start":0,"end":49})"
      "\n"
      R"({"video_id":"v1","frame_count":100,"segment":1,"start":50,"end":99})"
      "\n");
  const auto corpus = parse_timelines(in);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].video.video_id == "v1");
  CHECK(corpus[0].segment_count() == 2);
  CHECK(corpus[0].segments[1].start == 50);
}

TEST_CASE("parse_timelines: empty input is an empty corpus") {
  std::istringstream in("");
  CHECK(parse_timelines(in).empty());
}

TEST_CASE("parse_timelines: gaps, overlaps, and range violations are named") {
  std::istringstream gap(
      R"({"video_id":"v1","frame_count":100,"segment":0,"start":0,"end":49})"
      "\n"
      R"({"video_id":"v1","frame_count":100,"segment":1,"start":60,"end":99})"
      "\n");
  CHECK_THROWS_WITH_AS(parse_timelines(gap), doctest::Contains("gap between segments at frame 50"),
                       ValidationError);

  std::istringstream overlap(
      R"({"video_id":"v1","frame_count":100,"segment":0,"start":0,"end":50})"
      "\n"
      R"({"video_id":"v1","frame_count":100,"segment":1,"start":50,"end":99})"
      "\n");
  CHECK_THROWS_WITH_AS(parse_timelines(overlap), doctest::Contains("overlap"), ValidationError);

  std::istringstream beyond(
      R"({"video_id":"v1","frame_count":90,"segment":0,"start":0,"end":89})"
      "\n"
      R"({"video_id":"v1","frame_count":90,"segment":1,"start":90,"end":99})"
      "\n");
  CHECK_THROWS_WITH_AS(parse_timelines(beyond), doctest::Contains("exceeds frame_count"),
                       ValidationError);

  std::istringstream shortfall(
      R"({"video_id":"v1","frame_count":100,"segment":0,"start":0,"end":49})"
      "\n");
  CHECK_THROWS_AS(parse_timelines(shortfall), ValidationError);
}

TEST_CASE("parse_timelines: duplicate ids and malformed rows carry line numbers") {
  std::istringstream dup(
      R"({"video_id":"v1","frame_count":10,"segment":0,"start":0,"end":9})"
      "\n"
      R"({"video_id":"v2","frame_count":10,"segment":0,"start":0,"end":9})"
      "\n"
      R"({"video_id":"v1","frame_count":10,"segment":0,"start":0,"end":9})"
      "\n");
  CHECK_THROWS_WITH_AS(parse_timelines(dup), doctest::Contains("duplicate video_id"),
                       ValidationError);

  std::istringstream dup_seg(
      R"({"video_id":"v1","frame_count":10,"segment":0,"start":0,"end":4})"
      "\n"
      R"({"video_id":"v1","frame_count":10,"segment":0,"start":5,"end":9})"
      "\n");
  CHECK_THROWS_WITH_AS(parse_timelines(dup_seg), doctest::Contains("duplicate segment"),
                       ValidationError);

  std::istringstream bad("not json at all\n");
  CHECK_THROWS_WITH_AS(parse_timelines(bad), doctest::Contains("(line 1)"), ValidationError);

  std::istringstream bad_later(
      R"({"video_id":"v1","frame_count":10,"segment":0,"start":0,"end":9})"
      "\n{\"video_id\":42}\n");
  CHECK_THROWS_WITH_AS(parse_timelines(bad_later), doctest::Contains("(line 2)"), ValidationError);
}

TEST_CASE("segment_from_fixed_window: window arithmetic") {
  const VideoMeta ten{"v", 10, 30.0};
  auto tl = segment_from_fixed_window(ten, 4);
  REQUIRE(tl.segment_count() == 3);
  CHECK(tl.segments[0] == Segment{0, 0, 3});
  CHECK(tl.segments[1] == Segment{1, 4, 7});
  CHECK(tl.segments[2] == Segment{2, 8, 9});

  tl = segment_from_fixed_window(VideoMeta{"v", 4, 30.0}, 4);
  REQUIRE(tl.segment_count() == 1);
  CHECK(tl.segments[0] == Segment{0, 0, 3});

  tl = segment_from_fixed_window(VideoMeta{"v", 1, 30.0}, 100);
  REQUIRE(tl.segment_count() == 1);
  CHECK(tl.segments[0] == Segment{0, 0, 0});

  CHECK_THROWS_AS(segment_from_fixed_window(ten, 0), ValidationError);
}

TEST_CASE("segment lengths always sum to the frame count") {
  Rng rng(17);
  for (int it = 0; it < 100; ++it) {
    const std::int64_t t = 1 + static_cast<std::int64_t>(rng.next_below(500));
    const std::int64_t window = 1 + static_cast<std::int64_t>(rng.next_below(40));
    const auto tl = segment_from_fixed_window(VideoMeta{"v", t, 30.0}, window);
    std::int64_t sum = 0;
    for (auto len : tl.segment_lengths()) sum += len;
    CHECK(sum == t);
  }
}

TEST_CASE("frame_label: containment, boundaries, and range errors") {
  AnomalyAnnotation ann{"v", {{10, 20}}};
  CHECK(frame_label(ann, 15, 100) == 1);
  CHECK(frame_label(ann, 10, 100) == 1);
  CHECK(frame_label(ann, 20, 100) == 1);
  CHECK(frame_label(ann, 21, 100) == 0);
  CHECK(frame_label(ann, 9, 100) == 0);
  CHECK(frame_label(AnomalyAnnotation{"v", {}}, 50, 100) == 0);
  CHECK_THROWS_AS(frame_label(ann, 100, 100), ValidationError);
  CHECK_THROWS_AS(frame_label(ann, -1, 100), ValidationError);
}

TEST_CASE("frame_label: exhaustive agreement with interval containment") {
  const AnomalyAnnotation ann = normalize_annotation({"v", {{3, 5}, {9, 9}, {12, 14}}});
  for (std::int64_t f = 0; f < 20; ++f) {
    const bool inside = (f >= 3 && f <= 5) || f == 9 || (f >= 12 && f <= 14);
    CHECK(frame_label(ann, f, 20) == (inside ? 1 : 0));
  }
}

TEST_CASE("normalize_annotation: sorts and merges") {
  const auto ann = normalize_annotation({"v", {{30, 40}, {5, 10}, {11, 15}, {38, 45}}});
  REQUIRE(ann.intervals.size() == 2);
  CHECK(ann.intervals[0] == FrameInterval{5, 15});
  CHECK(ann.intervals[1] == FrameInterval{30, 45});
  CHECK_THROWS_AS(normalize_annotation({"v", {{5, 3}}}), ValidationError);
  CHECK_THROWS_AS(normalize_annotation({"v", {{-2, 3}}}), ValidationError);
}

TEST_CASE("annotations: parse and serialize") {
  std::istringstream in(
      R"({"video_id":"a","abnormal":[[10,20],[30,40]]})"
      "\n"
      R"({"video_id":"b","abnormal":[]})"
      "\n");
  const auto anns = parse_annotations(in);
  REQUIRE(anns.size() == 2);
  CHECK(anns[0].intervals.size() == 2);
  CHECK(anns[1].intervals.empty());

  std::istringstream dup(
      R"({"video_id":"a","abnormal":[]})"
      "\n"
      R"({"video_id":"a","abnormal":[]})"
      "\n");
  CHECK_THROWS_WITH_AS(parse_annotations(dup), doctest::Contains("duplicate video_id"),
                       ValidationError);
}

TEST_CASE("timeline reader streams one video at a time") {
  std::ostringstream buf;
  for (int v = 0; v < 3; ++v) {
    for (int s = 0; s < 2; ++s) {
      buf << R"({"video_id":"v)" << v << R"(","frame_count":20,"segment":)" << s
          << R"(,"start":)" << s * 10 << R"(,"end":)" << s * 10 + 9 << "}\n";
    }
  }
  std::istringstream in(buf.str());
  TimelineReader reader(in);
  SegmentTimeline tl;
  int seen = 0;
  while (reader.next(tl)) {
    CHECK(tl.video.video_id == "v" + std::to_string(seen));
    CHECK(tl.segment_count() == 2);
    ++seen;
  }
  CHECK(seen == 3);
}
