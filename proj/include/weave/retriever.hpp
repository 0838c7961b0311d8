#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "weave/types.hpp"

namespace weave {

/// Layered context for one phase: all strategies of the phase, then up to
/// `tips_per_error` tips for each requested error type found in the book.
struct RetrievalContext {
  Phase phase = Phase::Detection;
  std::vector<Strategy> strategies;
  /// Request order, duplicates removed.
  std::vector<std::pair<std::string, std::vector<Tip>>> tips_by_error;
  std::size_t tips_per_error = 0;

  std::size_t tip_count() const;
};

/// Tips are ranked by support size (descending), then stored order. The cap
/// applies per error type. Unknown error types are skipped.
RetrievalContext retrieve(const ExperienceBook& book, Phase phase,
                          std::span<const std::string> error_types, std::size_t tips_per_error);

/// Plain-text block embedded into downstream prompts.
std::string render(const RetrievalContext& context);

/// Naive memory baseline: top-k records by Jaccard similarity between
/// lowercased whitespace token sets of the query and each source text. Ties go
/// to the smaller record_id.
std::vector<FeedbackRecord> baseline_similar_records(std::span<const FeedbackRecord> memory,
                                                     const std::string& query, std::size_t k);

/// Jaccard similarity of the token sets of two texts (0 when both are empty).
double token_jaccard(const std::string& a, const std::string& b);

}  // namespace weave
