#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "weave/errors.hpp"
#include "weave/harness.hpp"
#include "weave/store.hpp"

using namespace weave;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "weave_harness_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kMarker = "Relevant Historical Experience";

// Revisions say whether woven context reached them; the judge can reward that.
void install_experiment(ScriptedBackend& b, int bonus) {
  fixtures::install_weaving(b);
  b.register_default("detect_v1", R"([{"error_type":"Improper Terminology Usage"}])");
  b.register_handler("revise_v1", [](const ChatRequest& r) {
    const bool fed = r.messages.back().content.find(kMarker) != std::string::npos;
    return (fed ? "improved: " : "plain: ") + fixtures::slot(r, "text");
  });
  b.register_default("critique_v1", R"({"score": 0.9, "issues": [], "recommendation": "accept"})");
  for (auto d : kAllDimensions)
    b.register_handler(judge_template_id(d), [bonus](const ChatRequest& r) {
      std::string text;
      for (const auto& [k, v] : r.slots)
        if (k == "report" || k == "error") text += v;
      const int label = text.rfind("improved", 0) == 0 ? 3 + bonus : 3;
      return json{{"label", std::to_string(label)}, {"reasoning", "scripted"}}.dump();
    });
}

RunConfig small_config() {
  RunConfig c;
  c.dataset = "fixture";
  c.split_seed = 3;
  c.evaluators = {"judge-a", "judge-b"};
  c.judge_runs = 2;
  c.weave.min_error_freq = 2;
  return c;
}

}  // namespace

TEST_CASE("split sizes and determinism") {
  const auto records = fixtures::make_records(200);
  const auto s = split(records, 1);
  CHECK(s.train.size() == 100);
  CHECK(s.test.size() == 100);
  std::set<std::string> ids;
  for (const auto& r : s.train) ids.insert(r.record_id);
  for (const auto& r : s.test) ids.insert(r.record_id);
  CHECK(ids.size() == 200);
  const auto again = split(records, 1);
  CHECK(again.train == s.train);
  CHECK(split(records, 2).train != s.train);

  const auto three = split(std::span(records).first(3), 9);
  CHECK(three.train.size() == 1);
  CHECK(three.test.size() == 2);
  CHECK_THROWS_AS(split(std::span(records).first(1), 9), PrecondError);
}

TEST_CASE("ingest tells records from detection cases") {
  const auto dir = fresh_dir("ingest");
  save_records(fixtures::make_records(4), dir / "records.jsonl");
  CHECK(std::holds_alternative<std::vector<FeedbackRecord>>(ingest(dir / "records.jsonl")));
  std::ofstream(dir / "cases.jsonl") << R"({"case_id":"c1","true_error_type":"A","predicted_error_type":"A"})"
                                     << "\n";
  CHECK(std::holds_alternative<std::vector<DetectionCase>>(ingest(dir / "cases.jsonl")));
  std::ofstream(dir / "bad.jsonl") << R"({"record_id":"a","metric":"Readability","score":9})" << "\n";
  CHECK_THROWS_AS(ingest(dir / "bad.jsonl"), SchemaError);
}

TEST_CASE("variants map to injected phases") {
  CHECK(injected_phases(Variant::None).empty());
  CHECK(injected_phases(Variant::RagBaseline).empty());
  CHECK(injected_phases(Variant::InjectRevision) == std::set<Phase>{Phase::Revision});
  CHECK(injected_phases(Variant::InjectTotal) ==
        std::set<Phase>{Phase::Detection, Phase::Revision, Phase::SelfCritique});
  CHECK(!needs_book(Variant::RagBaseline));
  CHECK(needs_book(Variant::InjectCritique));
  for (auto v : {Variant::None, Variant::RagBaseline, Variant::InjectDetection, Variant::InjectRevision,
                 Variant::InjectCritique, Variant::InjectTotal})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("inject_everything"), UsageError);
}

TEST_CASE("identical outputs give zero difference") {
  ScriptedBackend b;
  install_experiment(b, 1);
  const auto cfg = small_config();
  const auto parts = split(fixtures::make_records(20), cfg.split_seed);
  const auto report = run_experiment(cfg, parts.train, parts.test, Variant::None, b, nullptr);
  CHECK(report.mean_diff() == 0.0);
  CHECK(report.cells.size() == parts.test.size() * 2 * 2 * 4);
  for (const auto& row : report.rows) CHECK(row.mean_diff == 0.0);
}

TEST_CASE("a judge that rewards woven context gives a difference of one") {
  ScriptedBackend b;
  install_experiment(b, 1);
  const auto cfg = small_config();
  const auto parts = split(fixtures::make_records(30), cfg.split_seed);
  const auto book = build_book(parts.train, {b, cfg.weave});
  const auto report = run_experiment(cfg, parts.train, parts.test, Variant::InjectRevision, b, &book);
  CHECK(report.mean_diff() == doctest::Approx(1.0));
  // 2 evaluators x (4 dimensions + overall).
  REQUIRE(report.rows.size() == 10);
  CHECK(report.rows[0].evaluator == "judge-a");
  for (const auto& row : report.rows) {
    CHECK(row.mean_diff == doctest::Approx(1.0));
    CHECK(row.count == parts.test.size() * 2 * (row.dimension == "overall" ? 4 : 1));
  }
  CHECK_THROWS_AS(run_experiment(cfg, parts.train, parts.test, Variant::InjectTotal, b, nullptr),
                  PrecondError);
}

TEST_CASE("reports are byte-identical across runs") {
  auto once = [](const fs::path& dir) {
    ScriptedBackend b;
    install_experiment(b, 2);
    auto cfg = small_config();
    cfg.concurrency = 3;
    const auto parts = split(fixtures::make_records(24), cfg.split_seed);
    const auto book = build_book(parts.train, {b, cfg.weave});
    run_experiment(cfg, parts.train, parts.test, Variant::InjectTotal, b, &book, {dir});
    return std::pair(read_file(dir / "fixture_inject_total.csv"),
                     read_file(dir / "fixture_inject_total.traces.jsonl"));
  };
  const auto a = once(fresh_dir("bytes_a"));
  const auto b = once(fresh_dir("bytes_b"));
  CHECK(a == b);
  CHECK(a.first.rfind("dataset,variant,evaluator,dimension,mean_diff,count\n", 0) == 0);
}

TEST_CASE("an interrupted experiment resumes to the same report") {
  auto cfg = small_config();
  const auto parts = split(fixtures::make_records(20), cfg.split_seed);

  ScriptedBackend clean;
  install_experiment(clean, 1);
  const auto book = build_book(parts.train, {clean, cfg.weave});
  const auto want = run_experiment(cfg, parts.train, parts.test, Variant::InjectRevision, clean, &book);

  const auto dir = fresh_dir("resume");
  const auto poison = parts.test[6].source_text;
  ScriptedBackend flaky;
  install_experiment(flaky, 1);
  flaky.register_handler("critique_v1", [&](const ChatRequest& r) -> std::string {
    if (fixtures::slot(r, "original") == poison) throw TransportError("connection reset");
    return R"({"score": 0.9, "issues": [], "recommendation": "accept"})";
  });
  CHECK_THROWS(run_experiment(cfg, parts.train, parts.test, Variant::InjectRevision, flaky, &book, {dir}));
  const auto partial = dir / "fixture_inject_revision.partial.jsonl";
  REQUIRE(fs::exists(partial));
  CHECK(fixtures::lines_of(read_file(partial)).size() == 1 + 6);
  std::ofstream(partial, std::ios::app) << R"({"record_id": "r0)";

  ScriptedBackend resumed;
  install_experiment(resumed, 1);
  const auto got = run_experiment(cfg, parts.train, parts.test, Variant::InjectRevision, resumed, &book, {dir});
  CHECK(got == want);
  CHECK(resumed.calls("detect_v1") == parts.test.size() - 6);

  // A different configuration must not reuse the cursor.
  cfg.judge_runs = 1;
  ScriptedBackend other;
  install_experiment(other, 1);
  run_experiment(cfg, parts.train, parts.test, Variant::InjectRevision, other, &book, {dir});
  CHECK(other.calls("detect_v1") == parts.test.size());
}

TEST_CASE("sweeps produce one row per value") {
  ScriptedBackend b;
  install_experiment(b, 1);
  const auto cfg = small_config();
  const auto records = fixtures::make_records(24);
  const std::vector<double> values = {2, 4, 8};
  Diagnostics diag;
  const auto points = sweep(cfg, records, SweepAxis::GroupSize, values, Variant::InjectRevision, b, {}, &diag);
  CHECK(points.size() == 3);
  const auto csv = sweep_csv(cfg.dataset, SweepAxis::GroupSize, points);
  CHECK(fixtures::lines_of(csv).size() == 4);
  CHECK(csv.rfind("dataset,axis,value,variant,mean_diff,count\n", 0) == 0);
  // Leaves are abstracted once for all three books.
  CHECK(b.calls("abstract_v1") == split(records, cfg.split_seed).train.size());

  CHECK_THROWS_AS(sweep(cfg, records, SweepAxis::GroupSize, {}, Variant::None, b), UsageError);
  const std::vector<double> frac = {2.5};
  CHECK_THROWS_AS(sweep(cfg, records, SweepAxis::TipsPerError, frac, Variant::None, b), UsageError);
  CHECK(parse_sweep_axis("tau_t") == SweepAxis::TipsPerError);
  CHECK_THROWS_AS(parse_sweep_axis("speed"), UsageError);
}

TEST_CASE("tips-per-error sweep weaves one book") {
  ScriptedBackend b;
  install_experiment(b, 1);
  const auto cfg = small_config();
  const std::vector<double> values = {1, 3, 5};
  sweep(cfg, fixtures::make_records(24), SweepAxis::TipsPerError, values, Variant::InjectRevision, b);
  CHECK(b.calls("strategy_v1") == kAllPhases.size());
}

TEST_CASE("detection sweep over tau values") {
  std::vector<DetectionCase> cases;
  for (int k = 0; k < 6; ++k)
    cases.push_back({"c" + std::to_string(k), k % 2 ? "Laterality Error" : "Improper Terminology Usage",
                     std::nullopt, "text " + std::to_string(k)});
  cases.push_back({"stored", "Laterality Error", "Laterality Error", ""});
  ScriptedBackend b;
  b.register_default("detect_v1", R"([{"error_type":"Laterality Error"}])");
  RunConfig cfg;
  const std::vector<std::size_t> taus = {1, 3};
  const auto rows = detection_sweep(cases, cfg, b, nullptr, taus);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].metrics.accuracy == doctest::Approx(4.0 / 7));
  CHECK(b.calls("detect_v1") == 12);
  CHECK(fixtures::lines_of(detection_csv(rows)).front() == "model,tau,accuracy,macro_p,macro_r");
  CHECK_THROWS_AS(detection_sweep(cases, cfg, b, nullptr, {}), UsageError);

  const auto outcomes = evaluate_detection(cases, cfg, b, nullptr, 1);
  const auto recs = detection_training_records(outcomes, cases);
  REQUIRE(recs.size() == cases.size());
  CHECK(recs[1].score == 5);
  CHECK(recs[0].score == 1);
  CHECK(recs[0].error_annotations.front().error_type == "Improper Terminology Usage");
}

TEST_CASE("config parsing") {
  const auto j = json::parse(R"({
    "dataset": "demo", "split_seed": 7, "evaluators": ["a", "b"], "judge_runs": 3,
    "metric_set": ["Readability", "Correctness"], "temperature": 0.2,
    "weave": {"group_size": 5, "min_error_freq": 0.1},
    "pipeline": {"critique_threshold": 0.7}
  })");
  const auto c = run_config_from_json(j);
  CHECK(c.dataset == "demo");
  CHECK(c.judge_runs == 3);
  CHECK(c.weave.group_size == 5);
  CHECK(c.weave.metrics == std::vector<Dimension>{Dimension::Readability, Dimension::Correctness});
  CHECK(c.pipeline.critique_threshold == 0.7);
  CHECK(c.pipeline.request.temperature == 0.2);
  CHECK(to_json(run_config_from_json(to_json(c))) == to_json(c));

  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"datset": "typo"})")), UsageError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"weave": {"groupsize": 3}})")), UsageError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"judge_runs": "two"})")), UsageError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"split_ratio": 1.5})")), UsageError);
}

TEST_CASE("scripts load from JSONL") {
  const auto dir = fresh_dir("script");
  const auto req = judge_request({}, Dimension::Readability, "m", 1);
  std::ofstream(dir / "s.jsonl") << json{{"template_id", req.template_id}, {"slot_digest", req.slot_digest},
                                         {"reply", R"({"label": "5"})"}}.dump()
                                 << "\n"
                                 << json{{"template_id", "readability_v1"}, {"default", R"({"label": "2"})"}}.dump()
                                 << "\n";
  ScriptedBackend b;
  load_script(dir / "s.jsonl", b);
  CHECK(judge_score({}, Dimension::Readability, "m", 1, b).label == 5);
  CHECK(judge_score({}, Dimension::Readability, "m", 2, b).label == 2);
}
