#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weave/backend.hpp"
#include "weave/errors.hpp"
#include "weave/pipeline.hpp"
#include "weave/prompts.hpp"
#include "weave/types.hpp"

namespace weave {

/// Everything a dimension prompt may need. Readability and Formatting look at
/// `report`; Correctness and Meaningfulness look at the detected `error`.
struct JudgeSubject {
  std::string text_id;
  std::string report;
  std::string error;
  std::string error_type;
  std::string correctness_order = "\"1\",\"2\",\"3\",\"4\",\"5\"";
  std::string meaningfulness_order = "\"1\",\"2\",\"3\",\"4\",\"5\"";
  std::string categories = "Structure, terminology, style";
  std::string structure_requirements =
      "Findings and impression are separate sections; measurements carry units.";
  std::string terminology_requirements = "Standard anatomical and radiological terms.";
  std::string style_requirements = "Concise, objective, complete sentences.";
};

struct JudgeScore {
  int label = 3;  // 1..5
  std::string reasoning;
  Dimension dimension = Dimension::Correctness;
  std::string evaluator_id;
  int run_id = 0;
  std::string text_id;

  bool operator==(const JudgeScore&) const = default;
};

/// Template id used for a dimension ("correctness_v1", ...).
std::string judge_template_id(Dimension d);

/// The request judge_score would send. Evaluator, run and text id ride along
/// as digest-only slots so repeated runs are distinct requests.
ChatRequest judge_request(const JudgeSubject& subject, Dimension dimension,
                          const std::string& evaluator_id, int run_id,
                          const RequestOptions& opts = {},
                          const PromptLibrary& prompts = PromptLibrary::builtin());

JudgeScore judge_score(const JudgeSubject& subject, Dimension dimension,
                       const std::string& evaluator_id, int run_id, Backend& backend,
                       const RequestOptions& opts = {},
                       const PromptLibrary& prompts = PromptLibrary::builtin());

/// Y(F=1) - Y(F=0) for one (evaluator, run, text, dimension) cell.
double pairwise_diff(const JudgeScore& with_feedback, const JudgeScore& without_feedback);

struct DetectionOutcome {
  std::string case_id;
  std::string true_error_type;
  std::string predicted_error_type;

  bool operator==(const DetectionOutcome&) const = default;
};

struct DetectionMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
};

/// One-vs-rest over the classes seen in truth or prediction; a class whose
/// precision or recall denominator is zero contributes 0 to that mean.
DetectionMetrics detection_metrics(std::span<const DetectionOutcome> outcomes);

/// Seeded sample of `n_correct` correctly and `n_incorrect` wrongly classified
/// cases per true error type. Types with too few cases give all they have and
/// log a Shortfall warning.
std::vector<DetectionOutcome> select_training_cases(std::span<const DetectionOutcome> outcomes,
                                                    std::size_t n_correct,
                                                    std::size_t n_incorrect, std::uint64_t seed,
                                                    Diagnostics* diag = nullptr);

/// A detection case as stored on disk: either already predicted or carrying
/// the erroneous text to classify.
struct DetectionCase {
  std::string case_id;
  std::string true_error_type;
  std::optional<std::string> predicted_error_type;
  std::string error_text;
};

std::vector<DetectionCase> load_detection_cases(const std::filesystem::path& path);

/// Label given to a case where detection finds nothing.
inline constexpr std::string_view kNoErrorLabel = "none";

/// Classifies `error_text` with the detection agent: the first finding's type,
/// or kNoErrorLabel.
std::string classify_error(const std::string& error_text, const PipelineContext& ctx);

}  // namespace weave
