#include "weave/judge.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json_reply.hpp"
#include "weave/store.hpp"

namespace weave {

using json = nlohmann::json;

namespace {

constexpr std::string_view kRepairLabel =
    "Your previous reply could not be parsed. Reply with only a JSON object "
    "{\"label\": \"1\" to \"5\", \"reasoning\": \"...\"}.";

struct RawLabel {
  long long label;
  std::string reasoning;
};

std::optional<long long> coerce_label(const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d != static_cast<double>(static_cast<long long>(d))) return std::nullopt;
    return static_cast<long long>(d);
  }
  if (!v.is_string()) return std::nullopt;
  auto s = v.get<std::string>();
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  s = s.substr(b, e - b + 1);
  long long out = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return out;
}

}  // namespace

std::string judge_template_id(Dimension d) {
  switch (d) {
    case Dimension::Correctness: return "correctness_v1";
    case Dimension::Formatting: return "formatting_v1";
    case Dimension::Meaningfulness: return "meaningfulness_v1";
    case Dimension::Readability: return "readability_v1";
  }
  return "correctness_v1";
}

ChatRequest judge_request(const JudgeSubject& subject, Dimension dimension,
                          const std::string& evaluator_id, int run_id,
                          const RequestOptions& opts, const PromptLibrary& prompts) {
  const auto& tmpl = prompts.get(judge_template_id(dimension));
  const std::map<std::string, std::string, std::less<>> available = {
      {"report", subject.report},
      {"error", subject.error},
      {"error_type", subject.error_type},
      {"correctness_order", subject.correctness_order},
      {"meaningfulness_order", subject.meaningfulness_order},
      {"categories", subject.categories},
      {"structure_requirements", subject.structure_requirements},
      {"terminology_requirements", subject.terminology_requirements},
      {"style_requirements", subject.style_requirements},
  };
  SlotList slots;
  for (const auto& name : tmpl.slots()) {
    auto it = available.find(name);
    if (it == available.end())
      throw PrecondError(fmt::format("judge template '{}' has unknown slot '{}'", tmpl.id(), name));
    slots.emplace_back(name, it->second);
  }
  slots.emplace_back("__evaluator", evaluator_id);
  slots.emplace_back("__run", std::to_string(run_id));
  slots.emplace_back("__text", subject.text_id);
  auto o = opts;
  if (o.model_id.empty()) o.model_id = evaluator_id;
  return make_request(tmpl, std::move(slots), o);
}

JudgeScore judge_score(const JudgeSubject& subject, Dimension dimension,
                       const std::string& evaluator_id, int run_id, Backend& backend,
                       const RequestOptions& opts, const PromptLibrary& prompts) {
  const auto req = judge_request(subject, dimension, evaluator_id, run_id, opts, prompts);
  auto parse = [](std::string_view reply) -> std::optional<RawLabel> {
    auto j = detail::extract_json(reply);
    if (!j || !j->is_object() || !j->contains("label")) return std::nullopt;
    auto label = coerce_label((*j)["label"]);
    if (!label) return std::nullopt;
    RawLabel out{*label, {}};
    if (auto it = j->find("reasoning"); it != j->end() && it->is_string())
      out.reasoning = it->get<std::string>();
    return out;
  };
  auto raw = detail::complete_parsed<ParseError>(backend, req, parse, kRepairLabel);
  if (raw.label < 1 || raw.label > 5)
    throw RangeError(fmt::format("judge label {} outside 1..5", raw.label));
  return {static_cast<int>(raw.label), std::move(raw.reasoning), dimension, evaluator_id, run_id,
          subject.text_id};
}

double pairwise_diff(const JudgeScore& with_feedback, const JudgeScore& without_feedback) {
  if (with_feedback.dimension != without_feedback.dimension ||
      with_feedback.evaluator_id != without_feedback.evaluator_id ||
      with_feedback.run_id != without_feedback.run_id ||
      with_feedback.text_id != without_feedback.text_id)
    throw MismatchedPair(fmt::format("scores for ({}, {}, {}) and ({}, {}, {}) do not pair",
                                     with_feedback.evaluator_id, with_feedback.run_id,
                                     with_feedback.text_id, without_feedback.evaluator_id,
                                     without_feedback.run_id, without_feedback.text_id));
  return static_cast<double>(with_feedback.label) - static_cast<double>(without_feedback.label);
}

DetectionMetrics detection_metrics(std::span<const DetectionOutcome> outcomes) {
  if (outcomes.empty()) throw EmptyInput("detection_metrics needs at least one outcome");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> classes;
  std::size_t correct = 0;
  for (const auto& o : outcomes) {
    auto& t = classes[o.true_error_type];
    auto& p = classes[o.predicted_error_type];
    if (o.true_error_type == o.predicted_error_type) {
      ++correct;
      ++t.tp;
    } else {
      ++t.fn;
      ++p.fp;
    }
  }
  DetectionMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(outcomes.size());
  for (const auto& [_, c] : classes) {
    if (c.tp + c.fp > 0) m.macro_precision += static_cast<double>(c.tp) / (c.tp + c.fp);
    if (c.tp + c.fn > 0) m.macro_recall += static_cast<double>(c.tp) / (c.tp + c.fn);
  }
  m.macro_precision /= static_cast<double>(classes.size());
  m.macro_recall /= static_cast<double>(classes.size());
  return m;
}

std::vector<DetectionOutcome> select_training_cases(std::span<const DetectionOutcome> outcomes,
                                                    std::size_t n_correct,
                                                    std::size_t n_incorrect, std::uint64_t seed,
                                                    Diagnostics* diag) {
  std::map<std::string, std::pair<std::vector<DetectionOutcome>, std::vector<DetectionOutcome>>>
      by_type;
  for (const auto& o : outcomes) {
    auto& [right, wrong] = by_type[o.true_error_type];
    (o.true_error_type == o.predicted_error_type ? right : wrong).push_back(o);
  }
  std::mt19937_64 rng(seed);
  std::vector<DetectionOutcome> out;
  auto take = [&](const std::vector<DetectionOutcome>& pool, std::size_t k,
                  const std::string& type, std::string_view what) {
    if (pool.size() < k && diag)
      diag->warn(WarningKind::Shortfall, fmt::format("error type '{}': {} of {} {} cases", type,
                                                     pool.size(), k, what));
    std::sample(pool.begin(), pool.end(), std::back_inserter(out), k, rng);
  };
  for (const auto& [type, pools] : by_type) {
    take(pools.first, n_correct, type, "correct");
    take(pools.second, n_incorrect, type, "incorrect");
  }
  return out;
}

std::vector<DetectionCase> load_detection_cases(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<DetectionCase> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()), lineno);
    }
    auto str = [&](const char* key) -> std::optional<std::string> {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) return std::nullopt;
      if (!it->is_string())
        throw SchemaError(fmt::format("{}:{}: '{}' must be a string", path.string(), lineno, key),
                          lineno);
      return it->get<std::string>();
    };
    if (!j.is_object())
      throw SchemaError(fmt::format("{}:{}: expected an object", path.string(), lineno), lineno);
    DetectionCase c;
    auto id = str("case_id");
    auto truth = str("true_error_type");
    if (!id || !truth || id->empty() || truth->empty())
      throw SchemaError(
          fmt::format("{}:{}: case_id and true_error_type are required", path.string(), lineno),
          lineno);
    c.case_id = *id;
    c.true_error_type = *truth;
    c.predicted_error_type = str("predicted_error_type");
    c.error_text = str("error_text").value_or("");
    if (!c.predicted_error_type && c.error_text.empty())
      throw SchemaError(fmt::format("{}:{}: need predicted_error_type or error_text",
                                    path.string(), lineno),
                        lineno);
    if (!seen.insert(c.case_id).second)
      throw SchemaError(
          fmt::format("{}:{}: duplicate case_id '{}'", path.string(), lineno, c.case_id), lineno);
    out.push_back(std::move(c));
  }
  return out;
}

std::string classify_error(const std::string& error_text, const PipelineContext& ctx) {
  const auto findings = detect_errors(error_text, ctx);
  if (findings.empty()) return std::string(kNoErrorLabel);
  return findings.front().error_type;
}

}  // namespace weave
