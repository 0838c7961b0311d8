#pragma once

#include <cstddef>
#include <json.hpp>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "weave/backend.hpp"
#include "weave/errors.hpp"
#include "weave/prompts.hpp"
#include "weave/types.hpp"

namespace weave {

struct ErrorFinding {
  std::string error_type;
  std::string description;
  std::string excerpt;

  bool operator==(const ErrorFinding&) const = default;
};

enum class Recommendation { Accept, Revise, Reject };

std::string_view to_string(Recommendation r);

struct CritiqueResult {
  double score = 0.0;  // [0, 1]
  std::vector<std::string> issues;
  std::vector<std::string> strengths;
  Recommendation recommendation = Recommendation::Revise;
  std::string reasoning;
};

/// Detect -> revise -> critique loop settings. A critique score strictly below
/// `critique_threshold` triggers another revision, up to `max_iterations`
/// revisions in total.
struct PipelineConfig {
  double critique_threshold = 0.6;
  std::size_t max_iterations = 3;
  /// Phases that receive woven context.
  std::set<Phase> inject;
  std::size_t tips_per_error = 5;
  /// Optional raw-memory baseline: the `rag_k` most similar records are shown
  /// to the revision prompt.
  std::span<const FeedbackRecord> rag_memory;
  std::size_t rag_k = 3;
  RequestOptions request;

  void validate() const;
};

struct RevisionAttempt {
  std::string revised;
  CritiqueResult critique;
};

/// Audit record of one pipeline run.
struct RevisionTrace {
  std::string original;
  std::vector<ErrorFinding> findings;
  std::vector<RevisionAttempt> attempts;
  std::size_t iterations = 0;
  std::string final_text;
  bool accepted = false;
};

nlohmann::json to_json(const RevisionTrace& trace);

/// Raised when a critique call fails mid-run; carries what was done so far.
class PartialTrace : public Error {
 public:
  PartialTrace(const std::string& what, RevisionTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const RevisionTrace& trace() const noexcept { return trace_; }

 private:
  RevisionTrace trace_;
};

struct PipelineContext {
  Backend& backend;
  const PipelineConfig& config;
  /// May be null when no phase is injected.
  const ExperienceBook* book = nullptr;
  const PromptLibrary& prompts = PromptLibrary::builtin();
};

/// Context block placed into a phase's prompt; empty unless the phase is injected.
std::string context_block(const PipelineContext& ctx, Phase phase,
                          std::span<const std::string> error_types);

std::vector<ErrorFinding> detect_errors(const std::string& text, const PipelineContext& ctx);

std::string revise(const std::string& text, std::span<const ErrorFinding> findings,
                   const PipelineContext& ctx, std::span<const std::string> prior_issues = {});

CritiqueResult self_critique(const std::string& original, const std::string& revised,
                             std::span<const ErrorFinding> findings, const PipelineContext& ctx);

/// Detects once, then alternates revision and critique until the score
/// reaches the threshold or the iteration budget is spent. The final text is
/// the best-scoring attempt (latest on ties).
RevisionTrace run_pipeline(const std::string& text, const PipelineContext& ctx);

}  // namespace weave
