// vadkit: batch front end for the sampling/benchmark/evaluation pipeline.
// Subcommands: allocate, build-benchmark, evaluate, compare-sampling, simulate.
// Exit codes: 0 success, 1 IO error, 2 validation/usage error.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vadkit/allocation.hpp"
#include "vadkit/benchmark.hpp"
#include "vadkit/common.hpp"
#include "vadkit/evaluation.hpp"
#include "vadkit/scoring.hpp"
#include "vadkit/simulation.hpp"
#include "vadkit/timeline.hpp"

namespace {

using namespace vadkit;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
  if (!out) throw IoError("failed writing output file: " + path);
}

std::map<std::string, AnomalyAnnotation> annotation_map(const std::string& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, AnomalyAnnotation> map;
  for (AnomalyAnnotation& ann : parse_annotations(in)) {
    map[ann.video_id] = std::move(ann);
  }
  return map;
}

std::vector<Strategy> parse_strategy_list(const std::vector<std::string>& names) {
  std::vector<Strategy> strategies;
  if (names.empty()) {
    strategies = {Strategy::kAnomalyFocused, Strategy::kUniform, Strategy::kRandom};
  } else {
    for (const std::string& name : names) strategies.push_back(strategy_from_name(name));
  }
  return strategies;
}

struct SharedFlags {
  std::string segments;
  std::string scores;
  std::string annotations;
  std::string out;
  std::uint64_t seed = 0;
  double threshold = kDefaultLabelThreshold;
};

int cmd_allocate(const SharedFlags& shared, std::int64_t frames, double temperature,
                 const std::string& strategy_name_arg, const std::string& max_per_segment,
                 bool uniform_per_segment, unsigned threads) {
  AllocationConfig config;
  config.budget = frames;
  config.temperature = temperature;
  config.strategy = strategy_from_name(strategy_name_arg);
  config.max_per_segment = MaxPerSegment::from_string(max_per_segment);
  config.seed = shared.seed;
  config.uniform_per_segment = uniform_per_segment;

  std::ifstream scores_in = open_input(shared.scores);
  const TableScorer scorer(load_scores(scores_in));

  std::ifstream segments_in = open_input(shared.segments);
  std::ofstream out = open_output(shared.out);

  TimelineReader reader(segments_in);
  std::int64_t videos = 0;
  std::int64_t total_frames = 0;
  // Per-video work in bounded batches; output order matches input order.
  constexpr std::size_t kBatch = 64;
  std::vector<SegmentTimeline> batch;
  batch.reserve(kBatch);
  bool more = true;
  while (more) {
    batch.clear();
    SegmentTimeline tl;
    while (batch.size() < kBatch && (more = reader.next(tl))) batch.push_back(std::move(tl));
    if (batch.empty()) break;
    std::vector<AllocationPlan> plans(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
      try {
        const ScoredTimeline scored = attach_scores(batch[i], scorer, shared.threshold);
        plans[i] = make_plan(scored, config);
      } catch (const ValidationError& e) {
        throw ValidationError("video \"" + batch[i].video.video_id + "\": " + e.what());
      }
    });
    serialize_plans(plans, out);
    for (const AllocationPlan& plan : plans) {
      ++videos;
      total_frames += static_cast<std::int64_t>(plan.frames.size());
    }
  }
  if (!out) throw IoError("failed writing output file: " + shared.out);
  std::cout << "videos=" << videos << " frames=" << total_frames << "\n";
  return 0;
}

int cmd_build_benchmark(const SharedFlags& shared, const std::string& kind,
                        int samples_per_segment, const std::string& aggregator) {
  std::ifstream scores_in = open_input(shared.scores);
  const TableScorer scorer(load_scores(scores_in));
  std::ifstream segments_in = open_input(shared.segments);

  std::vector<ScoredTimeline> corpus;
  for (SegmentTimeline& tl : parse_timelines(segments_in)) {
    corpus.push_back(attach_scores(tl, scorer, shared.threshold));
  }

  TemplateQaGenerator generator;
  BenchmarkManifest manifest;
  if (kind == "image") {
    manifest = build_image_manifest(corpus, generator, shared.seed);
  } else if (kind == "video") {
    manifest = build_video_manifest(corpus, generator, samples_per_segment, shared.seed,
                                    AggregatorSpec::from_string(aggregator));
  } else {
    throw ValidationError("unknown benchmark kind \"" + kind + "\" (expected image or video)");
  }
  write_file(shared.out, serialize_manifest(manifest));
  std::cout << "kind=" << manifest.kind << " samples=" << manifest.samples.size()
            << " scoring_tasks=" << manifest.scoring_tasks.size()
            << " skipped=" << manifest.provenance.skipped << "\n";
  return 0;
}

int cmd_evaluate(const SharedFlags& shared, const std::string& plans_path,
                 const std::string& predictions_path, const std::string& segment_predictions_path,
                 const std::string& aggregator, bool all_frames) {
  const auto annotations = annotation_map(shared.annotations);

  EvaluationReport report;
  report.aggregator = aggregator;
  report.seed = shared.seed;
  report.tool_version = kToolVersion;

  if (!predictions_path.empty()) {
    if (plans_path.empty() && !all_frames) {
      throw ValidationError("frame-level evaluation needs --plans (or --all-frames)");
    }
    std::map<std::string, std::vector<std::int64_t>> sampled;
    if (!plans_path.empty()) {
      std::ifstream plans_in = open_input(plans_path);
      for (const AllocationPlan& plan : parse_plans(plans_in)) {
        sampled[plan.video_id] = plan.frames;
      }
    }
    std::ifstream preds_in = open_input(predictions_path);
    const FramePredictions predictions = load_frame_predictions(preds_in);

    std::ifstream segments_in = open_input(shared.segments);
    std::vector<FrameEvalItem> items;
    TimelineReader reader(segments_in);
    SegmentTimeline tl;
    while (reader.next(tl)) {
      FrameEvalItem item;
      item.video_id = tl.video.video_id;
      item.frame_count = tl.video.frame_count;
      auto ann_it = annotations.find(item.video_id);
      if (ann_it == annotations.end()) {
        throw ValidationError("missing annotation for video \"" + item.video_id + "\"");
      }
      item.annotation = ann_it->second;
      if (all_frames) {
        item.frames.resize(static_cast<std::size_t>(tl.video.frame_count));
        std::iota(item.frames.begin(), item.frames.end(), std::int64_t{0});
      } else {
        auto it = sampled.find(item.video_id);
        if (it == sampled.end()) {
          throw ValidationError("no plan for video \"" + item.video_id + "\"");
        }
        item.frames = it->second;
      }
      items.push_back(std::move(item));
    }
    const AucResult result = frame_level_eval(predictions, items);
    report.frame_auc = result.auc;
    report.frame_positives = result.positives;
    report.frame_negatives = result.negatives;
  }

  if (!segment_predictions_path.empty()) {
    std::ifstream seg_in = open_input(segment_predictions_path);
    const ScoreTable table = load_scores(seg_in);
    std::map<std::string, std::vector<double>> segment_scores;
    for (const auto& [key, score] : table) segment_scores[key.first].push_back(score);
    std::map<std::string, int> video_labels;
    for (const auto& [video_id, ann] : annotations) {
      video_labels[video_id] = ann.intervals.empty() ? 0 : 1;
    }
    const AucResult result =
        video_level_eval(segment_scores, video_labels, AggregatorSpec::from_string(aggregator));
    report.video_auc = result.auc;
    report.video_positives = result.positives;
    report.video_negatives = result.negatives;
  }

  if (!report.frame_auc && !report.video_auc) {
    throw ValidationError("nothing to evaluate: pass --predictions and/or --segment-predictions");
  }
  write_file(shared.out, serialize_report(report));
  std::cout << report_table(report);
  return 0;
}

int cmd_compare_sampling(const SharedFlags& shared, std::int64_t frames,
                         const std::vector<double>& temperatures,
                         const std::vector<std::string>& strategy_names,
                         const std::string& max_per_segment) {
  std::ifstream scores_in = open_input(shared.scores);
  const TableScorer scorer(load_scores(scores_in));
  std::ifstream segments_in = open_input(shared.segments);
  std::vector<ScoredTimeline> corpus;
  for (SegmentTimeline& tl : parse_timelines(segments_in)) {
    corpus.push_back(attach_scores(tl, scorer, shared.threshold));
  }
  const auto annotations = annotation_map(shared.annotations);
  const std::vector<Strategy> strategies = parse_strategy_list(strategy_names);

  std::vector<AllocationConfig> grid;
  for (double tau : temperatures.empty() ? std::vector<double>{1.0} : temperatures) {
    AllocationConfig config;
    config.budget = frames;
    config.temperature = tau;
    config.max_per_segment = MaxPerSegment::from_string(max_per_segment);
    config.seed = shared.seed;
    grid.push_back(config);
  }

  EvaluationReport report;
  report.rows = compare_strategies(corpus, annotations, strategies, grid);
  report.aggregator = AggregatorSpec{}.to_string();
  report.seed = shared.seed;
  report.tool_version = kToolVersion;
  write_file(shared.out, serialize_report(report));
  std::cout << report_table(report);
  return 0;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_path, std::int64_t frames,
                 const std::vector<double>& temperatures, int repetitions,
                 const std::vector<std::string>& strategy_names) {
  const CorpusSpec spec = parse_corpus_spec(read_file(spec_path));
  const std::vector<Strategy> strategies = parse_strategy_list(strategy_names);

  // One report per temperature; a single value writes the bare report, a
  // sweep writes a JSON array of them.
  const std::vector<double> taus = temperatures.empty() ? std::vector<double>{1.0} : temperatures;
  nlohmann::json sweep = nlohmann::json::array();
  for (double tau : taus) {
    const AblationReport report = run_ablation(spec, strategies, frames, tau, repetitions);
    sweep.push_back(nlohmann::json::parse(serialize_ablation_report(report)));
    std::cout << "temperature=" << tau << "\n" << ablation_table(report);
  }
  write_file(out_path, taus.size() == 1 ? sweep[0].dump(2) + "\n" : sweep.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anomaly-focused frame sampling, benchmark manifests, and AUC evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vadkit::kToolVersion));

  SharedFlags shared;
  std::int64_t frames = 16;
  double temperature = 1.0;
  std::vector<double> temperatures;
  std::string strategy = "anomaly_focused";
  std::vector<std::string> strategy_names;
  std::string max_per_segment = "len";
  bool uniform_per_segment = false;
  unsigned threads = 4;
  std::string kind;
  int samples_per_segment = 1;
  std::string aggregator = "max";
  std::string plans_path;
  std::string predictions_path;
  std::string segment_predictions_path;
  bool all_frames = false;
  std::string spec_path;
  int repetitions = 10;

  auto* alloc = app.add_subcommand("allocate", "write per-video frame allocation plans");
  alloc->add_option("--segments", shared.segments, "segments JSONL")->required();
  alloc->add_option("--scores", shared.scores, "segment scores JSONL")->required();
  alloc->add_option("--out", shared.out, "output plans JSONL")->required();
  alloc->add_option("--frames", frames, "frame budget N per video")->required();
  alloc->add_option("--temperature", temperature, "softmax temperature (default 1.0)");
  alloc->add_option("--strategy", strategy, "anomaly|uniform|random");
  alloc->add_option("--max-per-segment", max_per_segment, "per-segment cap: len or a number");
  alloc->add_option("--seed", shared.seed, "seed for the random strategy");
  alloc->add_option("--threshold", shared.threshold, "abnormal label threshold (default 0.5)");
  alloc->add_flag("--uniform-per-segment", uniform_per_segment,
                  "uniform baseline spaces frames within segments instead of globally");
  alloc->add_option("--threads", threads, "worker pool size");

  auto* bench = app.add_subcommand("build-benchmark", "build an image- or video-level manifest");
  bench->add_option("--kind", kind, "image|video")->required();
  bench->add_option("--segments", shared.segments, "segments JSONL")->required();
  bench->add_option("--scores", shared.scores, "segment scores JSONL")->required();
  bench->add_option("--out", shared.out, "output manifest JSON")->required();
  bench->add_option("--samples-per-segment", samples_per_segment,
                    "QA samples per segment (video kind)");
  bench->add_option("--seed", shared.seed, "question-type rotation seed");
  bench->add_option("--threshold", shared.threshold, "abnormal label threshold (default 0.5)");
  bench->add_option("--aggregator", aggregator, "scoring-task aggregator: max|mean|topk[:k]");

  auto* eval = app.add_subcommand("evaluate", "frame- and/or video-level ROC-AUC");
  eval->add_option("--segments", shared.segments, "segments JSONL")->required();
  eval->add_option("--annotations", shared.annotations, "annotations JSONL")->required();
  eval->add_option("--out", shared.out, "output report JSON")->required();
  eval->add_option("--plans", plans_path, "plans JSONL naming the sampled frames");
  eval->add_option("--predictions", predictions_path, "frame predictions JSONL");
  eval->add_option("--segment-predictions", segment_predictions_path,
                   "segment predictions JSONL for video-level AUC");
  eval->add_option("--aggregator", aggregator, "video aggregator: max|mean|topk[:k]");
  eval->add_flag("--all-frames", all_frames, "evaluate every frame instead of the sampled set");
  eval->add_option("--seed", shared.seed, "echoed into the report");

  auto* compare = app.add_subcommand("compare-sampling", "coverage/AUC rows per strategy");
  compare->add_option("--segments", shared.segments, "segments JSONL")->required();
  compare->add_option("--scores", shared.scores, "segment scores JSONL")->required();
  compare->add_option("--annotations", shared.annotations, "annotations JSONL")->required();
  compare->add_option("--out", shared.out, "output report JSON")->required();
  compare->add_option("--frames", frames, "frame budget N per video")->required();
  compare->add_option("--temperature", temperatures, "temperature grid (repeatable)");
  compare->add_option("--strategy", strategy_names, "strategies to compare (repeatable)");
  compare->add_option("--max-per-segment", max_per_segment, "per-segment cap: len or a number");
  compare->add_option("--seed", shared.seed, "seed for the random strategy");
  compare->add_option("--threshold", shared.threshold, "abnormal label threshold (default 0.5)");

  auto* sim = app.add_subcommand("simulate", "synthetic-corpus sampling ablation");
  sim->add_option("--spec", spec_path, "corpus spec JSON")->required();
  sim->add_option("--out", shared.out, "output report JSON")->required();
  sim->add_option("--frames", frames, "frame budget N per video")->required();
  sim->add_option("--temperature", temperatures, "temperature grid (repeatable)");
  sim->add_option("--repetitions", repetitions, "independent corpus draws");
  sim->add_option("--strategy", strategy_names, "strategies to compare (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (alloc->parsed()) {
      return cmd_allocate(shared, frames, temperature, strategy, max_per_segment,
                          uniform_per_segment, threads);
    }
    if (bench->parsed()) {
      return cmd_build_benchmark(shared, kind, samples_per_segment, aggregator);
    }
    if (eval->parsed()) {
      return cmd_evaluate(shared, plans_path, predictions_path, segment_predictions_path,
                          aggregator, all_frames);
    }
    if (compare->parsed()) {
      return cmd_compare_sampling(shared, frames, temperatures, strategy_names, max_per_segment);
    }
    if (sim->parsed()) {
      return cmd_simulate(spec_path, shared.out, frames, temperatures, repetitions,
                          strategy_names);
    }
  } catch (const vadkit::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const vadkit::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
