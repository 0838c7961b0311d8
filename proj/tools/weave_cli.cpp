#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

#include "weave/harness.hpp"
#include "weave/judge.hpp"
#include "weave/pipeline.hpp"
#include "weave/retriever.hpp"
#include "weave/stats/calibration.hpp"
#include "weave/stats/evaluator_metrics.hpp"
#include "weave/stats/hypothesis.hpp"
#include "weave/stats/synthetic.hpp"
#include "weave/store.hpp"
#include "weave/weaver.hpp"

namespace fs = std::filesystem;
using namespace weave;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string backend = "scripted";
  std::string out;
  std::string script;
};

RunConfig load_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) c.split_seed = *g.seed;
  c.validate();
  return c;
}

std::unique_ptr<Backend> make_backend(const Globals& g, const RunConfig& c) {
  if (g.backend == "live") return std::make_unique<HttpBackend>(c.backend);
  auto b = std::make_unique<ScriptedBackend>();
  if (!g.script.empty()) load_script(g.script, *b);
  return b;
}

// Writes to <out>/<name> when --out is set, else to stdout.
void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(g.out);
  write_atomic(fs::path(g.out) / name, text);
  std::cerr << "wrote " << (fs::path(g.out) / name).string() << "\n";
}

std::string read_text_arg(const std::string& text, const std::string& file) {
  if (!file.empty()) return read_file(file);
  if (text.empty()) throw UsageError("give --text or --text-file");
  return text;
}

std::vector<FeedbackRecord> records_from(const std::string& path) {
  auto data = ingest(path);
  if (auto* r = std::get_if<std::vector<FeedbackRecord>>(&data)) return std::move(*r);
  throw UsageError(path + " holds detection cases, not feedback records");
}

std::vector<DetectionCase> cases_from(const std::string& path) {
  auto data = ingest(path);
  if (auto* c = std::get_if<std::vector<DetectionCase>>(&data)) return std::move(*c);
  throw UsageError(path + " holds feedback records, not detection cases");
}

std::set<Phase> parse_inject(const std::vector<std::string>& names) {
  std::set<Phase> out;
  for (const auto& n : names) {
    if (n == "total" || n == "all") return {kAllPhases.begin(), kAllPhases.end()};
    out.insert(parse_phase(n));
  }
  return out;
}

void print_warnings(const Diagnostics& d) {
  for (const auto& w : d.warnings()) std::cerr << "warning: " << w.message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experience weaving toolkit: build experience books, run the revision pipeline, "
               "judge outputs and analyse evaluator reliability."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for splits and simulations");
  app.add_option("--backend", g.backend, "Completion backend")
      ->check(CLI::IsMember({"live", "scripted"}));
  app.add_option("--out", g.out, "Output directory (default: stdout)");
  app.add_option("--script", g.script, "JSONL of scripted replies for --backend scripted")
      ->check(CLI::ExistingFile);

  // weave
  auto* weave_cmd = app.add_subcommand("weave", "Build an experience book from feedback records");
  std::string records_path;
  weave_cmd->add_option("--records", records_path, "Feedback records (JSONL)")->required();
  bool weave_all = false;
  weave_cmd->add_flag("--all-records", weave_all, "Weave every record instead of the train split");

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Print the context block for a phase");
  std::string book_path, phase_name;
  std::vector<std::string> error_types;
  std::size_t tau = 5;
  retrieve_cmd->add_option("--book", book_path)->required()->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--phase", phase_name)->required();
  retrieve_cmd->add_option("--errors", error_types, "Error types")->delimiter(',');
  retrieve_cmd->add_option("--tau", tau, "Tips per error type");

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Detect, revise and critique one text");
  std::string text, text_file;
  std::vector<std::string> inject;
  pipeline_cmd->add_option("--text", text);
  pipeline_cmd->add_option("--text-file", text_file)->check(CLI::ExistingFile);
  pipeline_cmd->add_option("--book", book_path)->check(CLI::ExistingFile);
  pipeline_cmd->add_option("--inject", inject, "Phases to inject (detection,revision,"
                                               "self_critique or total)")
      ->delimiter(',');

  // judge
  auto* judge_cmd = app.add_subcommand("judge", "Score one text on one dimension");
  std::string dimension_name = "readability", evaluator = "judge", error_text, error_type;
  std::string text_id = "text";
  int run_id = 1;
  judge_cmd->add_option("--text", text);
  judge_cmd->add_option("--text-file", text_file)->check(CLI::ExistingFile);
  judge_cmd->add_option("--dimension", dimension_name);
  judge_cmd->add_option("--evaluator", evaluator);
  judge_cmd->add_option("--run", run_id);
  judge_cmd->add_option("--text-id", text_id);
  judge_cmd->add_option("--error", error_text, "Detected error (correctness, meaningfulness)");
  judge_cmd->add_option("--error-type", error_type);

  // detect-eval
  auto* detect_cmd = app.add_subcommand("detect-eval", "Detection accuracy and macro P/R");
  std::string cases_path;
  std::vector<std::size_t> taus;
  detect_cmd->add_option("--cases", cases_path, "Detection cases (JSONL)")->required();
  detect_cmd->add_option("--book", book_path)->check(CLI::ExistingFile);
  detect_cmd->add_option("--tau", taus, "Tips per error type (several allowed)")->delimiter(',');

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Fit the additive model and run the test battery");
  std::string panel_path;
  bool continuous = false;
  stats_cmd->add_option("--panel", panel_path, "Score panel CSV")->required()->check(CLI::ExistingFile);
  stats_cmd->add_flag("--continuous", continuous, "Allow scores outside 1..5");

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "Rank evaluators by their diagnostics");
  std::string metrics_path, costs_path;
  rank_cmd->add_option("--metrics", metrics_path, "Evaluator metrics CSV, or a score panel CSV")
      ->required()
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--costs", costs_path, "CSV evaluator,cost,score for the frontier")
      ->check(CLI::ExistingFile);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic panels or calibrate tests");
  stats::SyntheticParams sp;
  std::size_t calibrate_n = 0;
  sim_cmd->add_option("--evaluators", sp.n_e);
  sim_cmd->add_option("--runs", sp.n_j);
  sim_cmd->add_option("--texts", sp.n_t);
  sim_cmd->add_option("--attributes", sp.n_a);
  sim_cmd->add_option("--mu", sp.mu);
  sim_cmd->add_option("--noise-sd", sp.noise_sd);
  sim_cmd->add_option("--text-sd", sp.gamma.sd);
  sim_cmd->add_option("--rater-sd", sp.alpha.sd);
  sim_cmd->add_option("--run-effects", sp.beta.values, "Planted run effects")->delimiter(',');
  sim_cmd->add_flag("--labels", sp.label_scale, "Round to the 1..5 label scale");
  sim_cmd->add_option("--calibrate", calibrate_n, "Number of simulations for test calibration");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run one experiment variant against the baseline");
  std::string variant_name = "inject_total";
  run_cmd->add_option("--records", records_path)->required();
  run_cmd->add_option("--variant", variant_name);
  run_cmd->add_option("--book", book_path, "Prebuilt book (default: weave the train split)")
      ->check(CLI::ExistingFile);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per hyperparameter value");
  std::string axis_name;
  std::vector<double> values;
  sweep_cmd->add_option("--axis", axis_name,
                        "group_size, min_error_freq, tips_per_error or tau_detection")
      ->required();
  sweep_cmd->add_option("--values", values)->required()->delimiter(',');
  sweep_cmd->add_option("--records", records_path);
  sweep_cmd->add_option("--cases", cases_path);
  sweep_cmd->add_option("--book", book_path)->check(CLI::ExistingFile);
  sweep_cmd->add_option("--variant", variant_name);

  CLI11_PARSE(app, argc, argv);

  try {
    Diagnostics diag;
    if (*weave_cmd) {
      const auto cfg = load_config(g);
      auto backend = make_backend(g, cfg);
      auto records = records_from(records_path);
      if (!weave_all) records = split(records, cfg.split_seed, cfg.split_ratio).train;
      const WeaveContext ctx{*backend, cfg.weave, PromptLibrary::builtin(), &diag};
      BuildOptions opts;
      if (!g.out.empty()) {
        fs::create_directories(g.out);
        opts.pool_path = fs::path(g.out) / "pool.json";
      }
      const auto book = build_book(records, ctx, opts);
      print_warnings(diag);
      emit(g, "book.json", serialize_book(book));
    } else if (*retrieve_cmd) {
      const auto book = load_book(book_path);
      auto errs = error_types.empty() ? book.error_types() : error_types;
      emit(g, "context.txt", render(retrieve(book, parse_phase(phase_name), errs, tau)));
    } else if (*pipeline_cmd) {
      auto cfg = load_config(g);
      auto backend = make_backend(g, cfg);
      std::optional<ExperienceBook> book;
      if (!book_path.empty()) book = load_book(book_path);
      cfg.pipeline.inject = parse_inject(inject);
      if (!cfg.pipeline.inject.empty() && !book) throw UsageError("--inject needs --book");
      const PipelineContext ctx{*backend, cfg.pipeline, book ? &*book : nullptr};
      try {
        const auto trace = run_pipeline(read_text_arg(text, text_file), ctx);
        emit(g, "trace.jsonl", to_json(trace).dump() + "\n");
      } catch (const PartialTrace& p) {
        emit(g, "trace.partial.jsonl", to_json(p.trace()).dump() + "\n");
        throw;
      }
    } else if (*judge_cmd) {
      const auto cfg = load_config(g);
      auto backend = make_backend(g, cfg);
      JudgeSubject s;
      s.text_id = text_id;
      s.report = read_text_arg(text, text_file);
      s.error = error_text.empty() ? s.report : error_text;
      s.error_type = error_type;
      RequestOptions opts = cfg.pipeline.request;
      opts.model_id = evaluator;
      const auto score =
          judge_score(s, parse_dimension(dimension_name), evaluator, run_id, *backend, opts);
      emit(g, "judge.csv",
           fmt::format("text_id,evaluator,run,dimension,label\n{},{},{},{},{}\n", score.text_id,
                       score.evaluator_id, score.run_id, to_string(score.dimension), score.label));
    } else if (*detect_cmd) {
      const auto cfg = load_config(g);
      auto backend = make_backend(g, cfg);
      std::optional<ExperienceBook> book;
      if (!book_path.empty()) book = load_book(book_path);
      if (taus.empty()) taus = {cfg.pipeline.tips_per_error};
      const auto cases = cases_from(cases_path);
      emit(g, "detection.csv",
           detection_csv(detection_sweep(cases, cfg, *backend, book ? &*book : nullptr, taus)));
    } else if (*stats_cmd) {
      const auto panel = stats::load_panel_csv(panel_path, !continuous);
      std::vector<std::pair<std::string, stats::TestReport>> rows;
      std::string effects = "attribute,factor,level,effect\n";
      for (const auto& attr : panel.attributes()) {
        const stats::PanelView view(panel, attr);
        const auto fit = stats::fit_effects(view);
        effects += fmt::format("{},mu,,{}\n", attr, fit.mu);
        for (std::size_t k = 0; k < fit.texts.size(); ++k)
          effects += fmt::format("{},text,{},{}\n", attr, fit.texts[k], fit.gamma[k]);
        for (std::size_t k = 0; k < fit.evaluators.size(); ++k)
          effects += fmt::format("{},evaluator,{},{}\n", attr, fit.evaluators[k], fit.alpha[k]);
        for (std::size_t k = 0; k < fit.runs.size(); ++k)
          effects += fmt::format("{},run,{},{}\n", attr, fit.runs[k], fit.beta[k]);
        for (const auto& r : stats::run_battery(view)) rows.emplace_back(attr, r);
      }
      emit(g, "effects.csv", effects);
      emit(g, "tests.csv", stats::reports_csv(rows));
      emit(g, "evaluator_metrics.csv", stats::metrics_csv(stats::evaluator_metrics(panel)));
    } else if (*rank_cmd) {
      std::vector<stats::EvaluatorMetrics> metrics;
      const auto head = read_file(metrics_path).substr(0, 256);
      if (head.find("attribute") != std::string::npos && head.find("score") != std::string::npos)
        metrics = stats::evaluator_metrics(stats::load_panel_csv(metrics_path));
      else
        metrics = stats::load_metrics_csv(metrics_path);
      const auto rows = stats::rank_models(metrics);
      emit(g, "ranks.csv", stats::rank_csv(rows));
      std::cerr << stats::rank_table_text(rows);
      if (!costs_path.empty()) {
        const auto points = stats::load_costs_csv(costs_path);
        std::string out = "evaluator\n";
        for (const auto& e : stats::cost_frontier(points)) out += e + "\n";
        emit(g, "frontier.csv", out);
      }
    } else if (*sim_cmd) {
      sp.seed = g.seed.value_or(0);
      if (calibrate_n > 0) {
        emit(g, "calibration.csv",
             stats::calibration_csv(stats::calibrate(sp, calibrate_n, sp.seed)));
      } else {
        const auto s = stats::generate_synthetic_panel(sp);
        emit(g, "panel.csv", stats::panel_csv(s.panel));
      }
    } else if (*run_cmd) {
      const auto cfg = load_config(g);
      auto backend = make_backend(g, cfg);
      const auto variant = parse_variant(variant_name);
      const auto parts = split(records_from(records_path), cfg.split_seed, cfg.split_ratio);
      std::optional<ExperienceBook> book;
      if (!book_path.empty()) {
        book = load_book(book_path);
      } else if (needs_book(variant)) {
        const WeaveContext ctx{*backend, cfg.weave, PromptLibrary::builtin(), &diag};
        book = build_book(parts.train, ctx);
      }
      ExperimentOptions opts;
      if (!g.out.empty()) opts.out_dir = g.out;
      const auto report = run_experiment(cfg, parts.train, parts.test, variant, *backend,
                                         book ? &*book : nullptr, opts);
      print_warnings(diag);
      if (g.out.empty()) std::cout << report_csv(report);
    } else if (*sweep_cmd) {
      const auto cfg = load_config(g);
      auto backend = make_backend(g, cfg);
      const auto axis = parse_sweep_axis(axis_name);
      if (axis == SweepAxis::DetectionTips) {
        if (cases_path.empty()) throw UsageError("the tau_detection axis needs --cases");
        std::vector<std::size_t> ts;
        for (double v : values) {
          if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw UsageError("tau values must be positive integers");
          ts.push_back(static_cast<std::size_t>(v));
        }
        std::optional<ExperienceBook> book;
        if (!book_path.empty()) book = load_book(book_path);
        emit(g, "sweep_tau_detection.csv",
             detection_csv(detection_sweep(cases_from(cases_path), cfg, *backend,
                                           book ? &*book : nullptr, ts)));
      } else {
        if (records_path.empty()) throw UsageError("this axis needs --records");
        ExperimentOptions opts;
        if (!g.out.empty()) opts.out_dir = g.out;
        const auto points = sweep(cfg, records_from(records_path), axis, values,
                                  parse_variant(variant_name), *backend, opts, &diag);
        print_warnings(diag);
        emit(g, fmt::format("sweep_{}.csv", to_string(axis)),
             sweep_csv(cfg.dataset, axis, points));
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
