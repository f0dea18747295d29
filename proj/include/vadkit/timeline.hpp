#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace vadkit {

struct VideoMeta {
  std::string video_id;
  std::int64_t frame_count = 0;  // T; frames are 0-based indices in [0, T-1]
  double fps = 30.0;             // metadata only, never used for arithmetic

  bool operator==(const VideoMeta&) const = default;
};

// One shot segment: the closed frame range [start, end].
struct Segment {
  int index = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - start + 1; }
  bool contains(std::int64_t frame) const { return frame >= start && frame <= end; }
  bool operator==(const Segment&) const = default;
};

// Shot segments tiling [0, T-1] exactly: segment 0 starts at frame 0,
// segment i+1 starts at end_i + 1, the last segment ends at T-1.
struct SegmentTimeline {
  VideoMeta video;
  std::vector<Segment> segments;

  int segment_count() const { return static_cast<int>(segments.size()); }
  std::vector<std::int64_t> segment_lengths() const;
  // Index of the segment containing `frame`; throws if out of range.
  int segment_of(std::int64_t frame) const;
  // Throws ValidationError unless the tiling invariants hold.
  void validate() const;

  bool operator==(const SegmentTimeline&) const = default;
};

struct FrameInterval {
  std::int64_t start = 0;
  std::int64_t end = 0;  // inclusive

  bool operator==(const FrameInterval&) const = default;
};

// Ground-truth abnormal frame ranges for one video. An empty interval list
// means the video is fully normal.
struct AnomalyAnnotation {
  std::string video_id;
  std::vector<FrameInterval> intervals;  // normalized: sorted, disjoint

  bool operator==(const AnomalyAnnotation&) const = default;
};

// Sorts intervals and merges overlapping or touching ones.
AnomalyAnnotation normalize_annotation(AnomalyAnnotation ann);

// 1 if `frame` lies inside an abnormal interval, else 0.
// Throws ValidationError when frame is outside [0, frame_count).
int frame_label(const AnomalyAnnotation& ann, std::int64_t frame, std::int64_t frame_count);

// Fallback segmenter: fixed windows of `window` frames, last one truncated.
SegmentTimeline segment_from_fixed_window(const VideoMeta& video, std::int64_t window);

// Segments file: one JSON object per line,
//   {"video_id": str, "frame_count": int, "segment": int, "start": int, "end": int}
// Rows of one video must be contiguous in the file.
std::vector<SegmentTimeline> parse_timelines(std::istream& in);
void serialize_timelines(const std::vector<SegmentTimeline>& corpus, std::ostream& out);

// Reads one video's worth of rows at a time so corpora larger than memory
// can be processed per video.
class TimelineReader {
 public:
  explicit TimelineReader(std::istream& in) : in_(in) {}
  // Returns false at end of input.
  bool next(SegmentTimeline& out);

 private:
  std::istream& in_;
  std::int64_t line_no_ = 0;
  bool has_pending_ = false;
  std::string pending_line_;
  std::int64_t pending_line_no_ = 0;
  std::set<std::string> seen_ids_;
};

// Annotations file: one JSON object per line,
//   {"video_id": str, "abnormal": [[start, end], ...]}
std::vector<AnomalyAnnotation> parse_annotations(std::istream& in);
void serialize_annotations(const std::vector<AnomalyAnnotation>& anns, std::ostream& out);

}  // namespace vadkit
