#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "weave/backend.hpp"
#include "weave/judge.hpp"
#include "weave/pipeline.hpp"
#include "weave/types.hpp"
#include "weave/weaver.hpp"

namespace weave {

/// Everything an experiment needs besides data and a backend.
struct RunConfig {
  std::string dataset = "dataset";
  BackendConfig backend;
  WeaveConfig weave;
  PipelineConfig pipeline;
  std::uint64_t split_seed = 0;
  double split_ratio = 0.5;
  /// Judge dimensions, and the record metrics woven into the book.
  std::vector<Dimension> metric_set{kAllDimensions.begin(), kAllDimensions.end()};
  /// Judge model ids; each scores every output on every dimension.
  std::vector<std::string> evaluators{"judge"};
  int judge_runs = 1;
  /// Test records processed at once.
  std::size_t concurrency = 1;

  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
/// Throws UsageError for unknown keys or ill-typed values.
RunConfig load_run_config(const std::filesystem::path& path);

/// Either feedback records or detection cases, told apart by their id key.
using Dataset = std::variant<std::vector<FeedbackRecord>, std::vector<DetectionCase>>;
Dataset ingest(const std::filesystem::path& path);

struct Split {
  std::vector<FeedbackRecord> train;
  std::vector<FeedbackRecord> test;
};

/// Seeded shuffle, then the first floor(ratio * n) records train.
Split split(std::span<const FeedbackRecord> records, std::uint64_t seed, double ratio = 0.5);

enum class Variant { None, RagBaseline, InjectDetection, InjectRevision, InjectCritique, InjectTotal };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
/// Phases that receive woven context under `v`.
std::set<Phase> injected_phases(Variant v);
bool needs_book(Variant v);

/// One judged pair: the same (record, evaluator, run, dimension) scored on the
/// variant output and on the no-feedback output.
struct CellDiff {
  std::string record_id;
  std::string evaluator;
  int run = 0;
  Dimension dimension = Dimension::Correctness;
  int with_feedback = 0;
  int without_feedback = 0;

  double diff() const { return with_feedback - without_feedback; }
  bool operator==(const CellDiff&) const = default;
};

struct ReportRow {
  std::string evaluator;
  /// Dimension name or "overall".
  std::string dimension;
  double mean_diff = 0.0;
  std::size_t count = 0;

  bool operator==(const ReportRow&) const = default;
};

struct ExperimentReport {
  std::string dataset;
  std::string variant;
  std::vector<ReportRow> rows;
  std::vector<CellDiff> cells;

  /// Mean over every judged cell.
  double mean_diff() const;
  bool operator==(const ExperimentReport&) const = default;
};

/// Rows sorted by evaluator, then dimension, with an "overall" row per
/// evaluator.
std::vector<ReportRow> aggregate(std::span<const CellDiff> cells);

/// CSV `dataset,variant,evaluator,dimension,mean_diff,count`.
std::string report_csv(const ExperimentReport& report);

struct ExperimentOptions {
  /// When set, finished records are appended to a partial file there and a
  /// rerun with the same inputs skips them. The report, traces and CSV are
  /// also written there.
  std::optional<std::filesystem::path> out_dir;
};

/// For every test record: run the pipeline under `variant` and a single
/// direct revision without feedback, judge both and collect the differences.
ExperimentReport run_experiment(const RunConfig& config, std::span<const FeedbackRecord> train,
                                std::span<const FeedbackRecord> test, Variant variant,
                                Backend& backend, const ExperienceBook* book,
                                const ExperimentOptions& options = {});

enum class SweepAxis { GroupSize, MinErrorFreq, TipsPerError, DetectionTips };

std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepPoint {
  double value = 0.0;
  ExperimentReport report;
};

/// One experiment per value on a shared split. Book rebuilds for the group
/// size and frequency axes share one leaf cache. Throws UsageError on an empty
/// value list or the DetectionTips axis (see detection_sweep).
std::vector<SweepPoint> sweep(const RunConfig& config, std::span<const FeedbackRecord> records,
                              SweepAxis axis, std::span<const double> values, Variant variant,
                              Backend& backend, const ExperimentOptions& options = {},
                              Diagnostics* diag = nullptr);

/// CSV `dataset,axis,value,variant,mean_diff,count`, one row per value.
std::string sweep_csv(const std::string& dataset, SweepAxis axis,
                      std::span<const SweepPoint> points);

struct DetectionRow {
  std::string model;
  std::size_t tau = 0;
  DetectionMetrics metrics;
};

/// Predictions for every case: stored ones as-is, the rest classified with
/// the detection agent (book context injected when `book` is given).
std::vector<DetectionOutcome> evaluate_detection(std::span<const DetectionCase> cases,
                                                 const RunConfig& config, Backend& backend,
                                                 const ExperienceBook* book, std::size_t tau);

/// detection metrics per tau value; throws UsageError on an empty list.
std::vector<DetectionRow> detection_sweep(std::span<const DetectionCase> cases,
                                          const RunConfig& config, Backend& backend,
                                          const ExperienceBook* book,
                                          std::span<const std::size_t> taus);

/// CSV `model,tau,accuracy,macro_p,macro_r`.
std::string detection_csv(std::span<const DetectionRow> rows);

/// Feedback records built from detection outcomes so a book can be woven from
/// selected training cases: correct cases score 5, wrong ones 1.
std::vector<FeedbackRecord> detection_training_records(std::span<const DetectionOutcome> selected,
                                                       std::span<const DetectionCase> cases);

/// Reads scripted replies from JSONL lines of the form
/// {"template_id", "slot_digest", "reply"} or {"template_id", "default"}.
void load_script(const std::filesystem::path& path, ScriptedBackend& backend);

}  // namespace weave
