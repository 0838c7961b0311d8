#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace weave {

/// Stage of the improvement pipeline that consumes woven experience.
enum class Phase { Detection, Revision, SelfCritique };

inline constexpr std::array<Phase, 3> kAllPhases = {Phase::Detection, Phase::Revision,
                                                     Phase::SelfCritique};

/// Feedback dimension. Doubles as the metric name of a feedback record.
enum class Dimension { Correctness, Formatting, Meaningfulness, Readability };

inline constexpr std::array<Dimension, 4> kAllDimensions = {
    Dimension::Correctness, Dimension::Formatting, Dimension::Meaningfulness,
    Dimension::Readability};

std::string_view to_string(Phase p);
std::string_view to_string(Dimension d);
/// Human phrasing used inside prompts ("error detection", ...).
std::string_view phase_description(Phase p);

/// Case-insensitive; throws SchemaError on unknown names.
Phase parse_phase(std::string_view s);
Dimension parse_dimension(std::string_view s);

struct ErrorAnnotation {
  std::string error_type;
  std::string description;

  bool operator==(const ErrorAnnotation&) const = default;
};

/// One raw evaluation of a revision along one metric.
struct FeedbackRecord {
  std::string record_id;
  std::string source_text;
  std::string revised_text;
  Dimension metric = Dimension::Correctness;
  int score = 3;
  std::string comment;
  std::vector<ErrorAnnotation> error_annotations;

  bool operator==(const FeedbackRecord&) const = default;
};

/// Distilled experience. Level 0 units come straight from abstraction; higher
/// levels are merges whose provenance is the union of their children's.
struct ExperienceUnit {
  std::string unit_id;
  Dimension metric = Dimension::Correctness;
  std::string text;
  int level = 0;
  std::set<std::string> provenance;
  std::vector<std::string> children;

  bool operator==(const ExperienceUnit&) const = default;
};

struct Tip {
  Phase phase = Phase::Detection;
  std::string error_type;
  std::string text;
  std::set<std::string> supporting_units;

  bool operator==(const Tip&) const = default;
};

struct Strategy {
  Phase phase = Phase::Detection;
  std::string text;

  bool operator==(const Strategy&) const = default;
};

/// Hyperparameters a book was built with.
struct BookConfig {
  std::size_t group_size = 4;
  double min_error_freq = 4.0;
  std::size_t tips_per_error = 5;

  bool operator==(const BookConfig&) const = default;
};

using TipKey = std::pair<Phase, std::string>;

/// Layered retrieval structure: tips per (phase, error type) plus per-phase
/// strategies. `units` holds the cross-metric pool the tips were distilled from.
struct ExperienceBook {
  int version = 1;
  std::map<TipKey, std::vector<Tip>> tips;
  std::map<Phase, std::vector<Strategy>> strategies;
  std::map<std::string, std::size_t> error_frequencies;
  BookConfig config;
  /// Records the book was woven from; the denominator of fractional gates.
  std::size_t record_count = 0;
  std::vector<ExperienceUnit> units;

  std::vector<std::string> error_types() const;

  bool operator==(const ExperienceBook&) const = default;
};

}  // namespace weave
