#include <doctest.h>

#include <fmt/format.h>

#include <random>

#include "fixtures.hpp"
#include "weave/errors.hpp"
#include "weave/pipeline.hpp"
#include "weave/weaver.hpp"

using namespace weave;
using json = nlohmann::json;

namespace {

const char* kFindings =
    R"([{"error_type":"Improper Terminology Usage","description":"slang","excerpt":"ticker"}])";

// Scores are served in order; revisions are numbered from 1.
struct LoopBackend {
  ScriptedBackend backend;
  std::vector<double> scores;
  std::size_t next = 0;
  int revisions = 0;
  std::vector<std::string> revise_prompts;
  std::vector<std::string> critique_prompts;
  std::vector<std::string> detect_prompts;

  explicit LoopBackend(std::vector<double> s) : scores(std::move(s)) {
    backend.register_handler("detect_v1", [this](const ChatRequest& r) {
      detect_prompts.push_back(r.messages.back().content);
      return std::string(kFindings);
    });
    backend.register_handler("revise_v1", [this](const ChatRequest& r) {
      revise_prompts.push_back(r.messages.back().content);
      return fmt::format("revision {}", ++revisions);
    });
    backend.register_handler("critique_v1", [this](const ChatRequest& r) {
      critique_prompts.push_back(r.messages.back().content);
      const double s = scores.at(next++);
      return json{{"score", s},
                  {"issues", {fmt::format("issue after {}", next)}},
                  {"strengths", json::array()},
                  {"recommendation", s >= 0.6 ? "accept" : "revise"},
                  {"reasoning", "scripted"}}
          .dump();
    });
  }
};

RevisionTrace run_scores(const std::vector<double>& scores, PipelineConfig cfg = {}) {
  LoopBackend lb(scores);
  return run_pipeline("The ticker is big.", {lb.backend, cfg});
}

ExperienceBook small_book() {
  ScriptedBackend b;
  fixtures::install_weaving(b);
  WeaveConfig cfg;
  return build_book(fixtures::make_records(60), {b, cfg});
}

}  // namespace

TEST_CASE("a passing first critique stops after one iteration") {
  const auto t = run_scores({0.9});
  CHECK(t.iterations == 1);
  CHECK(t.accepted);
  CHECK(t.final_text == "revision 1");
  REQUIRE(t.findings.size() == 1);
  CHECK(t.findings[0].error_type == "Improper Terminology Usage");
}

TEST_CASE("a late pass is accepted on the third iteration") {
  const auto t = run_scores({0.4, 0.5, 0.7});
  CHECK(t.iterations == 3);
  CHECK(t.accepted);
  CHECK(t.final_text == "revision 3");
}

TEST_CASE("exhausting the budget keeps the best attempt") {
  const auto t = run_scores({0.4, 0.55, 0.5});
  CHECK(t.iterations == 3);
  CHECK(!t.accepted);
  CHECK(t.final_text == "revision 2");
  const auto u = run_scores({0.4, 0.5, 0.55});
  CHECK(!u.accepted);
  CHECK(u.final_text == "revision 3");
}

TEST_CASE("ties go to the latest attempt") {
  const auto t = run_scores({0.5, 0.5, 0.2});
  CHECK(t.final_text == "revision 2");
}

TEST_CASE("a score equal to the threshold halts") {
  const auto t = run_scores({0.4, 0.6, 0.9});
  CHECK(t.iterations == 2);
  CHECK(t.accepted);
  CHECK(t.final_text == "revision 2");
}

TEST_CASE("iterations never exceed the budget") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> budget(1, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    PipelineConfig cfg;
    cfg.max_iterations = budget(rng);
    std::vector<double> scores(cfg.max_iterations);
    for (auto& s : scores) s = u(rng);
    const auto t = run_scores(scores, cfg);
    REQUIRE(t.iterations <= cfg.max_iterations);
    REQUIRE(t.iterations == t.attempts.size());
    // Oracle: the first passing index, else the budget.
    std::size_t expect = cfg.max_iterations;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= cfg.critique_threshold) {
        expect = i + 1;
        break;
      }
    CHECK(t.iterations == expect);
    CHECK(t.accepted == (scores[expect - 1] >= cfg.critique_threshold));
    std::size_t best = 0;
    for (std::size_t i = 0; i < expect; ++i)
      if (scores[i] >= scores[best]) best = i;
    CHECK(t.final_text == fmt::format("revision {}", best + 1));
  }
}

TEST_CASE("critique issues feed the next revision") {
  LoopBackend lb({0.3, 0.9});
  PipelineConfig cfg;
  run_pipeline("The ticker is big.", {lb.backend, cfg});
  REQUIRE(lb.revise_prompts.size() == 2);
  CHECK(lb.revise_prompts[0].find("Issues raised") == std::string::npos);
  CHECK(lb.revise_prompts[1].find("Issues raised in the previous critique:\n- issue after 1") !=
        std::string::npos);
}

TEST_CASE("injection touches only the selected phases") {
  const auto book = small_book();
  const std::string marker = "Relevant Historical Experience";
  for (const auto phase : kAllPhases) {
    LoopBackend lb({0.9});
    PipelineConfig cfg;
    cfg.inject = {phase};
    run_pipeline("The ticker is big.", {lb.backend, cfg, &book});
    CAPTURE(to_string(phase));
    CHECK((lb.detect_prompts[0].find(marker) != std::string::npos) == (phase == Phase::Detection));
    CHECK((lb.revise_prompts[0].find(marker) != std::string::npos) == (phase == Phase::Revision));
    CHECK((lb.critique_prompts[0].find(marker) != std::string::npos) ==
          (phase == Phase::SelfCritique));
  }
  LoopBackend none({0.9});
  PipelineConfig cfg;
  run_pipeline("The ticker is big.", {none.backend, cfg, &book});
  CHECK(none.revise_prompts[0].find(marker) == std::string::npos);
}

TEST_CASE("injected revision context holds tips for the detected error") {
  const auto book = small_book();
  PipelineConfig cfg;
  cfg.inject = {Phase::Revision};
  cfg.tips_per_error = 2;
  ScriptedBackend b;
  const std::vector<ErrorFinding> f = {{"Improper Terminology Usage", "", ""}};
  const auto block = context_block({b, cfg, &book}, Phase::Revision,
                                   std::vector<std::string>{"Improper Terminology Usage"});
  CHECK(block.rfind("\nRelevant Historical Experience\n=== Strategy for Quality Control ===", 0) == 0);
  CHECK(block.find("[Improper Terminology Usage] Errors:") != std::string::npos);
  CHECK(block.find("Retrieved 2 tips") != std::string::npos);
  CHECK(context_block({b, cfg, nullptr}, Phase::Revision, {}).empty());
}

TEST_CASE("raw memory baseline adds similar records") {
  auto memory = fixtures::make_records(5);
  LoopBackend lb({0.9});
  PipelineConfig cfg;
  cfg.rag_memory = memory;
  cfg.rag_k = 2;
  run_pipeline(memory[3].source_text, {lb.backend, cfg});
  const auto& p = lb.revise_prompts[0];
  CHECK(p.find("Similar past revisions") != std::string::npos);
  CHECK(p.find("--- Original: " + memory[3].source_text) != std::string::npos);
}

TEST_CASE("critique scores outside the unit interval are rejected") {
  ScriptedBackend b;
  b.register_default("critique_v1", R"({"score": 1.2, "issues": [], "recommendation": "accept"})");
  PipelineConfig cfg;
  CHECK_THROWS_AS(self_critique("a", "b", {}, {b, cfg}), RangeError);

  ScriptedBackend s;
  s.register_default("critique_v1", R"({"score": "0.75", "recommendation": "accept"})");
  CHECK(self_critique("a", "b", {}, {s, cfg}).score == doctest::Approx(0.75));
}

TEST_CASE("a failing critique surfaces the partial trace") {
  LoopBackend lb({0.3, 1.7});
  PipelineConfig cfg;
  try {
    run_pipeline("The ticker is big.", {lb.backend, cfg});
    FAIL("expected PartialTrace");
  } catch (const PartialTrace& e) {
    CHECK(e.trace().attempts.size() == 1);
    CHECK(e.trace().iterations == 1);
    CHECK(e.trace().findings.size() == 1);
  }
}

TEST_CASE("malformed replies get one repair") {
  ScriptedBackend b;
  int calls = 0;
  b.register_handler("detect_v1", [&](const ChatRequest&) {
    return ++calls == 1 ? std::string("I found some errors!") : std::string(R"({"errors": []})");
  });
  PipelineConfig cfg;
  CHECK(detect_errors("x", {b, cfg}).empty());
  CHECK(calls == 2);

  ScriptedBackend bad;
  bad.register_default("detect_v1", "nope");
  CHECK_THROWS_AS(detect_errors("x", {bad, cfg}), ParseError);
  ScriptedBackend blank;
  blank.register_default("revise_v1", "   ");
  CHECK_THROWS_AS(revise("x", {}, {blank, cfg}), EmptyRevision);
}

TEST_CASE("trace serializes every attempt") {
  const auto t = run_scores({0.2, 0.8});
  const auto j = to_json(t);
  CHECK(j["attempts"].size() == 2);
  CHECK(j["accepted"] == true);
  CHECK(j["final"] == "revision 2");
}

TEST_CASE("pipeline config validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.critique_threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), PrecondError);
  cfg = {};
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), PrecondError);
}
