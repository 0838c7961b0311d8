#include "weave/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "json_reply.hpp"
#include "weave/retriever.hpp"

namespace weave {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> finding_types(std::span<const ErrorFinding> findings) {
  std::vector<std::string> out;
  for (const auto& f : findings)
    if (std::find(out.begin(), out.end(), f.error_type) == out.end()) out.push_back(f.error_type);
  return out;
}

std::string list_findings(std::span<const ErrorFinding> findings) {
  if (findings.empty()) return "(none detected)\n";
  std::string out;
  for (const auto& f : findings) {
    out += "- [" + f.error_type + "] " + f.description;
    if (!f.excerpt.empty()) out += " (\"" + f.excerpt + "\")";
    out += "\n";
  }
  return out;
}

std::optional<std::vector<std::string>> string_list(const json& j) {
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) return std::nullopt;
    out.push_back(s.get<std::string>());
  }
  return out;
}

constexpr std::string_view kRepairFindings =
    "Your previous reply could not be parsed. Reply with only a JSON array of objects with "
    "keys error_type, description and excerpt.";
constexpr std::string_view kRepairRevision =
    "Your previous reply was empty. Reply with only the full revised report text.";
constexpr std::string_view kRepairCritique =
    "Your previous reply could not be parsed. Reply with only a JSON object with keys score, "
    "issues, strengths, recommendation and reasoning.";

}  // namespace

std::string_view to_string(Recommendation r) {
  switch (r) {
    case Recommendation::Accept: return "accept";
    case Recommendation::Revise: return "revise";
    case Recommendation::Reject: return "reject";
  }
  return "revise";
}

void PipelineConfig::validate() const {
  if (!(critique_threshold > 0.0 && critique_threshold < 1.0))
    throw PrecondError("critique threshold must lie in (0, 1)");
  if (max_iterations < 1) throw PrecondError("max_iterations must be >= 1");
  if (tips_per_error < 1) throw PrecondError("tips_per_error must be >= 1");
}

json to_json(const RevisionTrace& trace) {
  json findings = json::array();
  for (const auto& f : trace.findings)
    findings.push_back({{"error_type", f.error_type}, {"description", f.description},
                        {"excerpt", f.excerpt}});
  json attempts = json::array();
  for (const auto& a : trace.attempts)
    attempts.push_back({{"revised", a.revised},
                        {"score", a.critique.score},
                        {"issues", a.critique.issues},
                        {"strengths", a.critique.strengths},
                        {"recommendation", to_string(a.critique.recommendation)},
                        {"reasoning", a.critique.reasoning}});
  return {{"original", trace.original}, {"findings", findings}, {"attempts", attempts},
          {"iterations", trace.iterations}, {"final", trace.final_text},
          {"accepted", trace.accepted}};
}

std::string context_block(const PipelineContext& ctx, Phase phase,
                          std::span<const std::string> error_types) {
  if (!ctx.config.inject.contains(phase) || !ctx.book) return {};
  const auto retrieved = retrieve(*ctx.book, phase, error_types, ctx.config.tips_per_error);
  return "\nRelevant Historical Experience\n" + render(retrieved);
}

std::vector<ErrorFinding> detect_errors(const std::string& text, const PipelineContext& ctx) {
  // Nothing has been detected yet, so detection sees tips for every known error.
  std::vector<std::string> known;
  if (ctx.book) known = ctx.book->error_types();
  SlotList slots = {{"text", text}, {"context", context_block(ctx, Phase::Detection, known)}};
  const auto req = make_request(ctx.prompts.get("detect_v1"), std::move(slots), ctx.config.request);

  auto parse = [](std::string_view reply) -> std::optional<std::vector<ErrorFinding>> {
    auto j = detail::extract_json(reply);
    if (!j) return std::nullopt;
    // Tolerate {"errors": [...]} wrappers.
    if (j->is_object() && j->contains("errors")) j = (*j)["errors"];
    if (!j->is_array()) return std::nullopt;
    std::vector<ErrorFinding> out;
    for (const auto& item : *j) {
      if (!item.is_object()) return std::nullopt;
      auto type = item.value("error_type", json());
      if (!type.is_string() || trim(type.get<std::string>()).empty()) return std::nullopt;
      ErrorFinding f;
      f.error_type = trim(type.get<std::string>());
      f.description = item.value("description", std::string{});
      f.excerpt = item.value("excerpt", std::string{});
      out.push_back(std::move(f));
    }
    return out;
  };
  return detail::complete_parsed<ParseError>(ctx.backend, req, parse, kRepairFindings);
}

std::string revise(const std::string& text, std::span<const ErrorFinding> findings,
                   const PipelineContext& ctx, std::span<const std::string> prior_issues) {
  const auto types = finding_types(findings);
  auto context = context_block(ctx, Phase::Revision, types);
  if (!ctx.config.rag_memory.empty()) {
    const auto similar = baseline_similar_records(ctx.config.rag_memory, text, ctx.config.rag_k);
    context += "\nSimilar past revisions\n";
    for (const auto& r : similar) {
      context += "--- Original: " + r.source_text + "\n";
      if (!r.revised_text.empty()) context += "    Revised: " + r.revised_text + "\n";
      if (!r.comment.empty()) context += "    Feedback: " + r.comment + "\n";
    }
  }
  std::string issues;
  if (!prior_issues.empty()) {
    issues = "\nIssues raised in the previous critique:\n";
    for (const auto& i : prior_issues) issues += "- " + i + "\n";
  }
  SlotList slots = {{"text", text},
                    {"findings", list_findings(findings)},
                    {"context", context},
                    {"issues", issues}};
  const auto req = make_request(ctx.prompts.get("revise_v1"), std::move(slots), ctx.config.request);

  auto parse = [](std::string_view reply) -> std::optional<std::string> {
    if (trim(reply).empty()) return std::nullopt;
    return std::string(reply);
  };
  return detail::complete_parsed<EmptyRevision>(ctx.backend, req, parse, kRepairRevision);
}

CritiqueResult self_critique(const std::string& original, const std::string& revised,
                             std::span<const ErrorFinding> findings, const PipelineContext& ctx) {
  const auto types = finding_types(findings);
  SlotList slots = {{"original", original},
                    {"revised", revised},
                    {"context", context_block(ctx, Phase::SelfCritique, types)}};
  const auto req =
      make_request(ctx.prompts.get("critique_v1"), std::move(slots), ctx.config.request);

  auto parse = [](std::string_view reply) -> std::optional<CritiqueResult> {
    auto j = detail::extract_json(reply);
    if (!j || !j->is_object()) return std::nullopt;
    auto score = j->value("score", json());
    if (score.is_string()) {
      try {
        score = std::stod(score.get<std::string>());
      } catch (...) {
        return std::nullopt;
      }
    }
    if (!score.is_number()) return std::nullopt;
    CritiqueResult c;
    c.score = score.get<double>();
    if (auto it = j->find("issues"); it != j->end()) {
      auto v = string_list(*it);
      if (!v) return std::nullopt;
      c.issues = std::move(*v);
    }
    if (auto it = j->find("strengths"); it != j->end()) {
      auto v = string_list(*it);
      if (!v) return std::nullopt;
      c.strengths = std::move(*v);
    }
    const auto rec = j->value("recommendation", std::string{"revise"});
    if (rec == "accept") c.recommendation = Recommendation::Accept;
    else if (rec == "revise") c.recommendation = Recommendation::Revise;
    else if (rec == "reject") c.recommendation = Recommendation::Reject;
    else return std::nullopt;
    c.reasoning = j->value("reasoning", std::string{});
    return c;
  };
  auto result = detail::complete_parsed<ParseError>(ctx.backend, req, parse, kRepairCritique);
  if (!(result.score >= 0.0 && result.score <= 1.0))
    throw RangeError(fmt::format("critique score {} outside [0, 1]", result.score));
  return result;
}

RevisionTrace run_pipeline(const std::string& text, const PipelineContext& ctx) {
  ctx.config.validate();
  RevisionTrace trace;
  trace.original = text;
  trace.findings = detect_errors(text, ctx);

  std::vector<std::string> issues;
  while (trace.attempts.size() < ctx.config.max_iterations) {
    auto revised = revise(text, trace.findings, ctx, issues);
    CritiqueResult critique;
    try {
      critique = self_critique(text, revised, trace.findings, ctx);
    } catch (const Error& e) {
      trace.iterations = trace.attempts.size();
      throw PartialTrace(std::string("critique failed: ") + e.what(), std::move(trace));
    }
    issues = critique.issues;
    const bool pass = critique.score >= ctx.config.critique_threshold;
    trace.attempts.push_back({std::move(revised), std::move(critique)});
    if (pass) break;
  }
  trace.iterations = trace.attempts.size();
  trace.accepted = trace.attempts.back().critique.score >= ctx.config.critique_threshold;
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.attempts.size(); ++i)
    if (trace.attempts[i].critique.score >= trace.attempts[best].critique.score) best = i;
  trace.final_text = trace.attempts[best].revised;
  return trace;
}

}  // namespace weave
