#include "vadkit/timeline.hpp"

#include <algorithm>
#include <set>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "vadkit/common.hpp"

namespace vadkit {

using nlohmann::json;

namespace {

std::string at(std::int64_t line_no) { return " (line " + std::to_string(line_no) + ")"; }

json parse_json_line(const std::string& line, std::int64_t line_no) {
  json row = json::parse(line, nullptr, false);
  if (row.is_discarded() || !row.is_object()) {
    throw ValidationError("malformed record" + at(line_no));
  }
  return row;
}

std::int64_t require_int(const json& row, const char* key, std::int64_t line_no) {
  if (!row.contains(key) || !row[key].is_number_integer()) {
    throw ValidationError(std::string("malformed record: missing integer field \"") + key +
                          "\"" + at(line_no));
  }
  return row[key].get<std::int64_t>();
}

std::string require_string(const json& row, const char* key, std::int64_t line_no) {
  if (!row.contains(key) || !row[key].is_string() || row[key].get<std::string>().empty()) {
    throw ValidationError(std::string("malformed record: missing string field \"") + key +
                          "\"" + at(line_no));
  }
  return row[key].get<std::string>();
}

struct SegmentRow {
  std::string video_id;
  std::int64_t frame_count;
  std::int64_t segment;
  std::int64_t start;
  std::int64_t end;
  std::int64_t line_no;
};

SegmentRow parse_segment_row(const std::string& line, std::int64_t line_no) {
  const json row = parse_json_line(line, line_no);
  return SegmentRow{require_string(row, "video_id", line_no),
                    require_int(row, "frame_count", line_no),
                    require_int(row, "segment", line_no),
                    require_int(row, "start", line_no),
                    require_int(row, "end", line_no),
                    line_no};
}

SegmentTimeline assemble_timeline(std::vector<SegmentRow> rows) {
  SegmentTimeline tl;
  tl.video.video_id = rows.front().video_id;
  tl.video.frame_count = rows.front().frame_count;
  std::sort(rows.begin(), rows.end(),
            [](const SegmentRow& a, const SegmentRow& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SegmentRow& r = rows[i];
    if (r.frame_count != tl.video.frame_count) {
      throw ValidationError("inconsistent frame_count for video \"" + r.video_id + "\"" +
                            at(r.line_no));
    }
    if (r.segment != static_cast<std::int64_t>(i)) {
      throw ValidationError("segment index " + std::to_string(r.segment) +
                            " does not match position " + std::to_string(i) + " for video \"" +
                            r.video_id + "\"" + at(r.line_no));
    }
    tl.segments.push_back(Segment{static_cast<int>(i), r.start, r.end});
  }
  // Tiling diagnostics with the offending frame named; validate() would
  // reject these too, but without file context.
  const std::int64_t t = tl.video.frame_count;
  std::int64_t expect = 0;
  for (const Segment& s : tl.segments) {
    if (s.start > expect) {
      throw ValidationError("gap between segments at frame " + std::to_string(expect) +
                            " in video \"" + tl.video.video_id + "\"");
    }
    if (s.start < expect) {
      throw ValidationError("overlap between segments at frame " + std::to_string(s.start) +
                            " in video \"" + tl.video.video_id + "\"");
    }
    if (s.end < s.start) {
      throw ValidationError("segment " + std::to_string(s.index) + " ends before it starts in video \"" +
                            tl.video.video_id + "\"");
    }
    if (s.end >= t) {
      throw ValidationError("segment " + std::to_string(s.index) + " exceeds frame_count " +
                            std::to_string(t) + " in video \"" + tl.video.video_id + "\"");
    }
    expect = s.end + 1;
  }
  if (expect != t) {
    throw ValidationError("segments of video \"" + tl.video.video_id + "\" end at frame " +
                          std::to_string(expect - 1) + " but frame_count is " + std::to_string(t));
  }
  tl.validate();
  return tl;
}

}  // namespace

std::vector<std::int64_t> SegmentTimeline::segment_lengths() const {
  std::vector<std::int64_t> lengths;
  lengths.reserve(segments.size());
  for (const Segment& s : segments) lengths.push_back(s.length());
  return lengths;
}

int SegmentTimeline::segment_of(std::int64_t frame) const {
  if (frame < 0 || frame >= video.frame_count) {
    throw ValidationError("frame " + std::to_string(frame) + " out of range for video \"" +
                          video.video_id + "\"");
  }
  auto it = std::upper_bound(segments.begin(), segments.end(), frame,
                             [](std::int64_t f, const Segment& s) { return f < s.start; });
  return static_cast<int>(it - segments.begin()) - 1;
}

void SegmentTimeline::validate() const {
  if (video.video_id.empty()) throw ValidationError("video_id must be non-empty");
  if (video.frame_count < 1) throw ValidationError("frame_count must be >= 1");
  if (!(video.fps > 0.0)) throw ValidationError("fps must be positive");
  if (segments.empty()) throw ValidationError("timeline needs at least one segment");
  std::int64_t expect = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (s.index != static_cast<int>(i)) throw ValidationError("segment indices must be 0..M-1");
    if (s.start != expect) throw ValidationError("segments must tile the video contiguously");
    if (s.end < s.start) throw ValidationError("segment end before start");
    expect = s.end + 1;
  }
  if (expect != video.frame_count) {
    throw ValidationError("segments must cover exactly [0, frame_count)");
  }
}

AnomalyAnnotation normalize_annotation(AnomalyAnnotation ann) {
  for (const FrameInterval& iv : ann.intervals) {
    if (iv.start < 0 || iv.end < iv.start) {
      throw ValidationError("invalid abnormal interval [" + std::to_string(iv.start) + ", " +
                            std::to_string(iv.end) + "] in video \"" + ann.video_id + "\"");
    }
  }
  std::sort(ann.intervals.begin(), ann.intervals.end(),
            [](const FrameInterval& a, const FrameInterval& b) { return a.start < b.start; });
  std::vector<FrameInterval> merged;
  for (const FrameInterval& iv : ann.intervals) {
    if (!merged.empty() && iv.start <= merged.back().end + 1) {
      merged.back().end = std::max(merged.back().end, iv.end);
    } else {
      merged.push_back(iv);
    }
  }
  ann.intervals = std::move(merged);
  return ann;
}

int frame_label(const AnomalyAnnotation& ann, std::int64_t frame, std::int64_t frame_count) {
  if (frame < 0 || frame >= frame_count) {
    throw ValidationError("frame " + std::to_string(frame) + " out of range [0, " +
                          std::to_string(frame_count) + ")");
  }
  for (const FrameInterval& iv : ann.intervals) {
    if (frame >= iv.start && frame <= iv.end) return 1;
    if (iv.start > frame) break;  // intervals are sorted
  }
  return 0;
}

SegmentTimeline segment_from_fixed_window(const VideoMeta& video, std::int64_t window) {
  if (window < 1) throw ValidationError("window must be >= 1");
  SegmentTimeline tl;
  tl.video = video;
  std::int64_t pos = 0;
  int index = 0;
  while (pos < video.frame_count) {
    const std::int64_t end = std::min(pos + window - 1, video.frame_count - 1);
    tl.segments.push_back(Segment{index++, pos, end});
    pos = end + 1;
  }
  tl.validate();
  return tl;
}

bool TimelineReader::next(SegmentTimeline& out) {
  std::vector<SegmentRow> rows;
  std::string current_id;
  for (;;) {
    std::string line;
    std::int64_t line_no;
    if (has_pending_) {
      line = std::move(pending_line_);
      line_no = pending_line_no_;
      has_pending_ = false;
    } else {
      if (!std::getline(in_, line)) break;
      ++line_no_;
      line_no = line_no_;
    }
    if (line.empty()) continue;
    SegmentRow row = parse_segment_row(line, line_no);
    if (rows.empty()) {
      current_id = row.video_id;
      if (!seen_ids_.insert(current_id).second) {
        throw ValidationError("duplicate video_id \"" + current_id + "\"" + at(line_no));
      }
    } else if (row.video_id != current_id) {
      pending_line_ = std::move(line);
      pending_line_no_ = line_no;
      has_pending_ = true;
      break;
    }
    for (const SegmentRow& prev : rows) {
      if (prev.segment == row.segment) {
        throw ValidationError("duplicate segment " + std::to_string(row.segment) +
                              " for video \"" + current_id + "\"" + at(line_no));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return false;
  out = assemble_timeline(std::move(rows));
  return true;
}

std::vector<SegmentTimeline> parse_timelines(std::istream& in) {
  std::vector<SegmentTimeline> corpus;
  TimelineReader reader(in);
  SegmentTimeline tl;
  while (reader.next(tl)) corpus.push_back(std::move(tl));
  return corpus;
}

void serialize_timelines(const std::vector<SegmentTimeline>& corpus, std::ostream& out) {
  for (const SegmentTimeline& tl : corpus) {
    for (const Segment& s : tl.segments) {
      json row;
      row["video_id"] = tl.video.video_id;
      row["frame_count"] = tl.video.frame_count;
      row["segment"] = s.index;
      row["start"] = s.start;
      row["end"] = s.end;
      out << row.dump() << '\n';
    }
  }
}

std::vector<AnomalyAnnotation> parse_annotations(std::istream& in) {
  std::vector<AnomalyAnnotation> anns;
  std::set<std::string> seen;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json row = parse_json_line(line, line_no);
    AnomalyAnnotation ann;
    ann.video_id = require_string(row, "video_id", line_no);
    if (!row.contains("abnormal") || !row["abnormal"].is_array()) {
      throw ValidationError("malformed record: missing \"abnormal\" array" + at(line_no));
    }
    for (const json& pair : row["abnormal"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
          !pair[1].is_number_integer()) {
        throw ValidationError("malformed abnormal interval" + at(line_no));
      }
      ann.intervals.push_back(FrameInterval{pair[0].get<std::int64_t>(), pair[1].get<std::int64_t>()});
    }
    if (!seen.insert(ann.video_id).second) {
      throw ValidationError("duplicate video_id \"" + ann.video_id + "\"" + at(line_no));
    }
    anns.push_back(normalize_annotation(std::move(ann)));
  }
  return anns;
}

void serialize_annotations(const std::vector<AnomalyAnnotation>& anns, std::ostream& out) {
  for (const AnomalyAnnotation& ann : anns) {
    json intervals = json::array();
    for (const FrameInterval& iv : ann.intervals) intervals.push_back({iv.start, iv.end});
    json row;
    row["video_id"] = ann.video_id;
    row["abnormal"] = intervals;
    out << row.dump() << '\n';
  }
}

}  // namespace vadkit
