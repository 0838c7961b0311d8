#include "weave/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "csv.hpp"
#include "weave/concurrency.hpp"
#include "weave/digest.hpp"
#include "weave/retriever.hpp"
#include "weave/store.hpp"

namespace weave {

using json = nlohmann::json;

namespace {

// Typed access to a config object that rejects keys nobody asked for.
class ConfigReader {
 public:
  ConfigReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UsageError(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw UsageError(fmt::format("{}.{}: wrong type ({})", where_, key, it->dump()));
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw UsageError(fmt::format("{}: unknown key '{}'", where_, it.key()));
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<Dimension> parse_dimensions(const json& j, const std::string& where) {
  if (!j.is_array()) throw UsageError(where + ": expected an array of dimension names");
  std::vector<Dimension> out;
  for (const auto& d : j) {
    if (!d.is_string()) throw UsageError(where + ": dimension names must be strings");
    try {
      out.push_back(parse_dimension(d.get<std::string>()));
    } catch (const SchemaError& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
  return out;
}

json dimensions_json(const std::vector<Dimension>& ds) {
  json out = json::array();
  for (auto d : ds) out.push_back(std::string(to_string(d)));
  return out;
}

JudgeSubject subject_for(const FeedbackRecord& r, const std::string& output) {
  JudgeSubject s;
  s.text_id = r.record_id;
  s.report = output;
  s.error = output;
  s.error_type = r.error_annotations.empty() ? "unspecified" : r.error_annotations.front().error_type;
  return s;
}

json cell_json(const CellDiff& c) {
  return {{"evaluator", c.evaluator},
          {"run", c.run},
          {"dimension", to_string(c.dimension)},
          {"with", c.with_feedback},
          {"without", c.without_feedback}};
}

CellDiff cell_from_json(const std::string& record_id, const json& j) {
  CellDiff c;
  c.record_id = record_id;
  c.evaluator = j.at("evaluator").get<std::string>();
  c.run = j.at("run").get<int>();
  c.dimension = parse_dimension(j.at("dimension").get<std::string>());
  c.with_feedback = j.at("with").get<int>();
  c.without_feedback = j.at("without").get<int>();
  return c;
}

struct RecordResult {
  json trace;
  std::string baseline;
  std::vector<CellDiff> cells;
  bool done = false;
};

json record_result_json(const std::string& record_id, const RecordResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back(cell_json(c));
  return {{"record_id", record_id}, {"trace", r.trace}, {"baseline", r.baseline}, {"cells", cells}};
}

std::string experiment_fingerprint(const RunConfig& config, std::span<const FeedbackRecord> train,
                                   std::span<const FeedbackRecord> test, Variant variant,
                                   const ExperienceBook* book) {
  json j = {{"config", to_json(config)}, {"variant", to_string(variant)}};
  json ids = json::array();
  for (const auto& r : test) ids.push_back(to_json(r));
  j["test"] = ids;
  if (variant == Variant::RagBaseline) {
    json mem = json::array();
    for (const auto& r : train) mem.push_back(r.record_id);
    j["memory"] = mem;
  }
  if (book && needs_book(variant)) j["book"] = sha256_hex(serialize_book(*book));
  return sha256_hex(j.dump());
}

// Loads finished records from a partial file written for the same fingerprint.
std::map<std::string, RecordResult> load_partial(const std::filesystem::path& path,
                                                 const std::string& fingerprint) {
  std::map<std::string, RecordResult> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    auto j = json::parse(line, nullptr, false);
    // A torn last line from an interrupted write is dropped.
    if (j.is_discarded() || !j.is_object()) continue;
    if (header) {
      if (j.value("fingerprint", std::string{}) != fingerprint) return {};
      header = false;
      continue;
    }
    try {
      RecordResult r;
      const auto id = j.at("record_id").get<std::string>();
      r.trace = j.at("trace");
      r.baseline = j.at("baseline").get<std::string>();
      for (const auto& c : j.at("cells")) r.cells.push_back(cell_from_json(id, c));
      r.done = true;
      out[id] = std::move(r);
    } catch (const std::exception&) {
      continue;
    }
  }
  return out;
}

std::string fmt_num(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

void RunConfig::validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw UsageError("split_ratio must lie in (0, 1)");
  if (metric_set.empty()) throw UsageError("metric_set must not be empty");
  if (evaluators.empty()) throw UsageError("evaluators must not be empty");
  if (judge_runs < 1) throw UsageError("judge_runs must be >= 1");
  try {
    weave.validate();
    pipeline.validate();
  } catch (const PrecondError& e) {
    throw UsageError(e.what());
  }
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  ConfigReader top(j, "config");
  top.get("dataset", c.dataset);
  top.get("split_seed", c.split_seed);
  top.get("split_ratio", c.split_ratio);
  top.get("evaluators", c.evaluators);
  top.get("judge_runs", c.judge_runs);
  top.get("concurrency", c.concurrency);
  if (const auto* m = top.child("metric_set")) c.metric_set = parse_dimensions(*m, "config.metric_set");
  RequestOptions request;
  top.get("temperature", request.temperature);
  top.get("max_tokens", request.max_tokens);
  if (const auto* b = top.child("backend")) {
    ConfigReader r(*b, "config.backend");
    r.get("endpoint_url", c.backend.endpoint_url);
    r.get("auth_env_var", c.backend.auth_env_var);
    r.get("model_id", c.backend.model_id);
    r.get("timeout_ms", c.backend.timeout_ms);
    r.get("max_retries", c.backend.max_retries);
    r.get("max_inflight", c.backend.max_inflight);
    r.get("backoff_base_ms", c.backend.backoff_base_ms);
    r.finish();
  }
  if (const auto* w = top.child("weave")) {
    ConfigReader r(*w, "config.weave");
    r.get("group_size", c.weave.group_size);
    r.get("min_error_freq", c.weave.min_error_freq);
    r.get("leaf_min", c.weave.leaf_min);
    r.get("leaf_max", c.weave.leaf_max);
    r.get("tips_min", c.weave.tips_min);
    r.get("tips_max", c.weave.tips_max);
    r.get("strategies_min", c.weave.strategies_min);
    r.get("strategies_max", c.weave.strategies_max);
    r.get("tips_per_error", c.weave.tips_per_error);
    r.get("concurrency", c.weave.concurrency);
    r.finish();
  }
  if (const auto* p = top.child("pipeline")) {
    ConfigReader r(*p, "config.pipeline");
    r.get("critique_threshold", c.pipeline.critique_threshold);
    r.get("max_iterations", c.pipeline.max_iterations);
    r.get("tips_per_error", c.pipeline.tips_per_error);
    r.get("rag_k", c.pipeline.rag_k);
    r.finish();
  }
  top.finish();
  request.model_id = c.backend.model_id;
  c.weave.request = request;
  c.pipeline.request = request;
  c.weave.metrics = c.metric_set;
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  return {
      {"dataset", c.dataset},
      {"split_seed", c.split_seed},
      {"split_ratio", c.split_ratio},
      {"metric_set", dimensions_json(c.metric_set)},
      {"evaluators", c.evaluators},
      {"judge_runs", c.judge_runs},
      {"concurrency", c.concurrency},
      {"temperature", c.pipeline.request.temperature},
      {"max_tokens", c.pipeline.request.max_tokens},
      {"backend",
       {{"endpoint_url", c.backend.endpoint_url},
        {"auth_env_var", c.backend.auth_env_var},
        {"model_id", c.backend.model_id},
        {"timeout_ms", c.backend.timeout_ms},
        {"max_retries", c.backend.max_retries},
        {"max_inflight", c.backend.max_inflight},
        {"backoff_base_ms", c.backend.backoff_base_ms}}},
      {"weave",
       {{"group_size", c.weave.group_size},
        {"min_error_freq", c.weave.min_error_freq},
        {"leaf_min", c.weave.leaf_min},
        {"leaf_max", c.weave.leaf_max},
        {"tips_min", c.weave.tips_min},
        {"tips_max", c.weave.tips_max},
        {"strategies_min", c.weave.strategies_min},
        {"strategies_max", c.weave.strategies_max},
        {"tips_per_error", c.weave.tips_per_error},
        {"concurrency", c.weave.concurrency}}},
      {"pipeline",
       {{"critique_threshold", c.pipeline.critique_threshold},
        {"max_iterations", c.pipeline.max_iterations},
        {"tips_per_error", c.pipeline.tips_per_error},
        {"rag_k", c.pipeline.rag_k}}},
  };
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto text = read_file(path);
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw UsageError(path.string() + ": invalid JSON");
  return run_config_from_json(j);
}

Dataset ingest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_object() && j.contains("schema")) continue;
    if (j.is_object() && j.contains("case_id")) return load_detection_cases(path);
    break;
  }
  return load_records(path);
}

Split split(std::span<const FeedbackRecord> records, std::uint64_t seed, double ratio) {
  if (records.size() < 2) throw PrecondError("split needs at least 2 records");
  if (!(ratio > 0.0 && ratio < 1.0)) throw PrecondError("split ratio must lie in (0, 1)");
  std::vector<FeedbackRecord> all(records.begin(), records.end());
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  const auto n_train =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(all.size())));
  Split s;
  s.train.assign(std::make_move_iterator(all.begin()),
                 std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)));
  s.test.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)),
                std::make_move_iterator(all.end()));
  return s;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::None: return "none";
    case Variant::RagBaseline: return "rag_baseline";
    case Variant::InjectDetection: return "inject_detection";
    case Variant::InjectRevision: return "inject_revision";
    case Variant::InjectCritique: return "inject_critique";
    case Variant::InjectTotal: return "inject_total";
  }
  return "none";
}

Variant parse_variant(std::string_view s) {
  for (auto v : {Variant::None, Variant::RagBaseline, Variant::InjectDetection,
                 Variant::InjectRevision, Variant::InjectCritique, Variant::InjectTotal})
    if (to_string(v) == s) return v;
  throw UsageError(fmt::format("unknown variant '{}'", s));
}

std::set<Phase> injected_phases(Variant v) {
  switch (v) {
    case Variant::InjectDetection: return {Phase::Detection};
    case Variant::InjectRevision: return {Phase::Revision};
    case Variant::InjectCritique: return {Phase::SelfCritique};
    case Variant::InjectTotal: return {Phase::Detection, Phase::Revision, Phase::SelfCritique};
    default: return {};
  }
}

bool needs_book(Variant v) { return !injected_phases(v).empty(); }

double ExperimentReport::mean_diff() const {
  if (cells.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : cells) sum += c.diff();
  return sum / static_cast<double>(cells.size());
}

std::vector<ReportRow> aggregate(std::span<const CellDiff> cells) {
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
  for (const auto& c : cells) {
    for (const auto& dim : {std::string(to_string(c.dimension)), std::string("overall")}) {
      auto& [sum, n] = acc[{c.evaluator, dim}];
      sum += c.diff();
      ++n;
    }
  }
  std::vector<ReportRow> rows;
  for (const auto& [key, v] : acc)
    rows.push_back({key.first, key.second, v.first / static_cast<double>(v.second), v.second});
  return rows;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "dataset,variant,evaluator,dimension,mean_diff,count\n";
  for (const auto& r : report.rows)
    out += fmt::format("{},{},{},{},{},{}\n", detail::csv_field(report.dataset), report.variant,
                       detail::csv_field(r.evaluator), r.dimension, fmt_num(r.mean_diff), r.count);
  return out;
}

ExperimentReport run_experiment(const RunConfig& config, std::span<const FeedbackRecord> train,
                                std::span<const FeedbackRecord> test, Variant variant,
                                Backend& backend, const ExperienceBook* book,
                                const ExperimentOptions& options) {
  config.validate();
  if (needs_book(variant) && !book)
    throw PrecondError(fmt::format("variant {} needs a book", to_string(variant)));

  PipelineConfig with_cfg = config.pipeline;
  with_cfg.inject = injected_phases(variant);
  if (variant == Variant::RagBaseline) with_cfg.rag_memory = train;
  else with_cfg.rag_memory = {};
  PipelineConfig without_cfg = config.pipeline;
  without_cfg.inject.clear();
  without_cfg.rag_memory = {};
  const PipelineContext with_ctx{backend, with_cfg, book};
  const PipelineContext without_ctx{backend, without_cfg, nullptr};

  std::vector<RecordResult> results(test.size());
  std::optional<std::filesystem::path> partial_path;
  std::ofstream partial;
  std::mutex partial_mu;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    partial_path = *options.out_dir / fmt::format("{}_{}.partial.jsonl", config.dataset,
                                                  to_string(variant));
    const auto fp = experiment_fingerprint(config, train, test, variant, book);
    auto done = load_partial(*partial_path, fp);
    for (std::size_t k = 0; k < test.size(); ++k)
      if (auto it = done.find(test[k].record_id); it != done.end()) results[k] = std::move(it->second);
    // Rewrite the cursor file with the records kept, so torn or stale lines go away.
    std::string keep = json{{"fingerprint", fp}}.dump() + "\n";
    for (std::size_t k = 0; k < test.size(); ++k)
      if (results[k].done) keep += record_result_json(test[k].record_id, results[k]).dump() + "\n";
    write_atomic(*partial_path, keep);
    partial.open(*partial_path, std::ios::app);
  }

  parallel_for(test.size(), config.concurrency, [&](std::size_t k) {
    if (results[k].done) return;
    const auto& rec = test[k];
    RecordResult r;
    const auto trace = run_pipeline(rec.source_text, with_ctx);
    r.trace = to_json(trace);
    r.baseline = revise(rec.source_text, {}, without_ctx);
    const auto with_subject = subject_for(rec, trace.final_text);
    const auto without_subject = subject_for(rec, r.baseline);
    for (const auto& ev : config.evaluators)
      for (int run = 1; run <= config.judge_runs; ++run)
        for (auto dim : config.metric_set) {
          RequestOptions opts = config.pipeline.request;
          opts.model_id = ev;
          const auto a = judge_score(with_subject, dim, ev, run, backend, opts);
          const auto b = judge_score(without_subject, dim, ev, run, backend, opts);
          pairwise_diff(a, b);
          r.cells.push_back({rec.record_id, ev, run, dim, a.label, b.label});
        }
    r.done = true;
    if (partial.is_open()) {
      std::lock_guard lock(partial_mu);
      partial << record_result_json(rec.record_id, r).dump() << "\n" << std::flush;
    }
    results[k] = std::move(r);
  });

  ExperimentReport report;
  report.dataset = config.dataset;
  report.variant = std::string(to_string(variant));
  for (const auto& r : results) report.cells.insert(report.cells.end(), r.cells.begin(), r.cells.end());
  report.rows = aggregate(report.cells);

  if (options.out_dir) {
    const auto stem = fmt::format("{}_{}", config.dataset, to_string(variant));
    std::string traces;
    for (std::size_t k = 0; k < test.size(); ++k)
      traces += record_result_json(test[k].record_id, results[k]).dump() + "\n";
    write_atomic(*options.out_dir / (stem + ".traces.jsonl"), traces);
    write_atomic(*options.out_dir / (stem + ".csv"), report_csv(report));
  }
  return report;
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::GroupSize: return "group_size";
    case SweepAxis::MinErrorFreq: return "min_error_freq";
    case SweepAxis::TipsPerError: return "tips_per_error";
    case SweepAxis::DetectionTips: return "tau_detection";
  }
  return "group_size";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  for (auto a : {SweepAxis::GroupSize, SweepAxis::MinErrorFreq, SweepAxis::TipsPerError,
                 SweepAxis::DetectionTips})
    if (to_string(a) == s) return a;
  if (s == "N_G" || s == "ng") return SweepAxis::GroupSize;
  if (s == "tau_e" || s == "tau-e") return SweepAxis::MinErrorFreq;
  if (s == "tau_t" || s == "tau-t") return SweepAxis::TipsPerError;
  throw UsageError(fmt::format("unknown sweep axis '{}'", s));
}

std::vector<SweepPoint> sweep(const RunConfig& config, std::span<const FeedbackRecord> records,
                              SweepAxis axis, std::span<const double> values, Variant variant,
                              Backend& backend, const ExperimentOptions& options,
                              Diagnostics* diag) {
  if (values.empty()) throw UsageError("sweep needs at least one value");
  if (axis == SweepAxis::DetectionTips)
    throw UsageError("the tau_detection axis sweeps detection cases; use detection_sweep");
  const auto parts = split(records, config.split_seed, config.split_ratio);
  LeafCache cache;
  std::optional<ExperienceBook> shared_book;
  std::vector<SweepPoint> out;
  for (double value : values) {
    RunConfig cfg = config;
    auto as_count = [&](const char* what) {
      if (value < 1.0 || value != std::floor(value))
        throw UsageError(fmt::format("{} values must be positive integers, got {}", what, value));
      return static_cast<std::size_t>(value);
    };
    switch (axis) {
      case SweepAxis::GroupSize: cfg.weave.group_size = as_count("group_size"); break;
      case SweepAxis::MinErrorFreq: cfg.weave.min_error_freq = value; break;
      case SweepAxis::TipsPerError:
        cfg.pipeline.tips_per_error = as_count("tips_per_error");
        break;
      case SweepAxis::DetectionTips: break;
    }
    cfg.validate();
    const ExperienceBook* book = nullptr;
    std::optional<ExperienceBook> built;
    if (needs_book(variant)) {
      if (axis == SweepAxis::TipsPerError) {
        if (!shared_book) {
          const WeaveContext wctx{backend, cfg.weave, PromptLibrary::builtin(), diag, &cache};
          shared_book = build_book(parts.train, wctx);
        }
        book = &*shared_book;
      } else {
        const WeaveContext wctx{backend, cfg.weave, PromptLibrary::builtin(), diag, &cache};
        built = build_book(parts.train, wctx);
        book = &*built;
      }
    }
    ExperimentOptions opts = options;
    if (opts.out_dir) opts.out_dir = *opts.out_dir / fmt::format("{}_{}", to_string(axis), value);
    out.push_back({value, run_experiment(cfg, parts.train, parts.test, variant, backend, book, opts)});
  }
  return out;
}

std::string sweep_csv(const std::string& dataset, SweepAxis axis,
                      std::span<const SweepPoint> points) {
  std::string out = "dataset,axis,value,variant,mean_diff,count\n";
  for (const auto& p : points)
    out += fmt::format("{},{},{},{},{},{}\n", detail::csv_field(dataset), to_string(axis), p.value,
                       p.report.variant, fmt_num(p.report.mean_diff()), p.report.cells.size());
  return out;
}

std::vector<DetectionOutcome> evaluate_detection(std::span<const DetectionCase> cases,
                                                 const RunConfig& config, Backend& backend,
                                                 const ExperienceBook* book, std::size_t tau) {
  PipelineConfig pcfg = config.pipeline;
  pcfg.tips_per_error = tau;
  if (book) pcfg.inject = {Phase::Detection};
  pcfg.validate();
  const PipelineContext ctx{backend, pcfg, book};
  std::vector<DetectionOutcome> out(cases.size());
  parallel_for(cases.size(), config.concurrency, [&](std::size_t k) {
    const auto& c = cases[k];
    out[k] = {c.case_id, c.true_error_type,
              c.predicted_error_type ? *c.predicted_error_type : classify_error(c.error_text, ctx)};
  });
  return out;
}

std::vector<DetectionRow> detection_sweep(std::span<const DetectionCase> cases,
                                          const RunConfig& config, Backend& backend,
                                          const ExperienceBook* book,
                                          std::span<const std::size_t> taus) {
  if (taus.empty()) throw UsageError("detection sweep needs at least one tau");
  std::vector<DetectionRow> rows;
  const auto model = config.backend.model_id.empty() ? std::string("model") : config.backend.model_id;
  for (auto tau : taus) {
    const auto outcomes = evaluate_detection(cases, config, backend, book, tau);
    rows.push_back({model, tau, detection_metrics(outcomes)});
  }
  return rows;
}

std::string detection_csv(std::span<const DetectionRow> rows) {
  std::string out = "model,tau,accuracy,macro_p,macro_r\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{}\n", detail::csv_field(r.model), r.tau,
                       fmt_num(r.metrics.accuracy), fmt_num(r.metrics.macro_precision),
                       fmt_num(r.metrics.macro_recall));
  return out;
}

std::vector<FeedbackRecord> detection_training_records(std::span<const DetectionOutcome> selected,
                                                       std::span<const DetectionCase> cases) {
  std::map<std::string, const DetectionCase*> by_id;
  for (const auto& c : cases) by_id[c.case_id] = &c;
  std::vector<FeedbackRecord> out;
  for (const auto& o : selected) {
    FeedbackRecord r;
    r.record_id = o.case_id;
    if (auto it = by_id.find(o.case_id); it != by_id.end()) r.source_text = it->second->error_text;
    r.metric = Dimension::Correctness;
    const bool right = o.true_error_type == o.predicted_error_type;
    r.score = right ? 5 : 1;
    r.comment = right ? fmt::format("Correctly identified as {}.", o.true_error_type)
                      : fmt::format("Labelled {} but the error is {}.", o.predicted_error_type,
                                    o.true_error_type);
    r.error_annotations.push_back({o.true_error_type, r.comment});
    out.push_back(std::move(r));
  }
  return out;
}

void load_script(const std::filesystem::path& path, ScriptedBackend& backend) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    auto bad = [&](const std::string& why) {
      return SchemaError(fmt::format("{}:{}: {}", path.string(), lineno, why), lineno);
    };
    if (!j.is_object() || !j.contains("template_id") || !j["template_id"].is_string())
      throw bad("expected an object with a template_id");
    const auto tid = j["template_id"].get<std::string>();
    if (j.contains("default")) {
      if (!j["default"].is_string()) throw bad("default must be a string");
      backend.register_default(tid, j["default"].get<std::string>());
    } else if (j.contains("slot_digest") && j.contains("reply")) {
      if (!j["slot_digest"].is_string() || !j["reply"].is_string())
        throw bad("slot_digest and reply must be strings");
      backend.register_script(tid, j["slot_digest"].get<std::string>(), j["reply"].get<std::string>());
    } else {
      throw bad("need either default or slot_digest + reply");
    }
  }
}

}  // namespace weave
