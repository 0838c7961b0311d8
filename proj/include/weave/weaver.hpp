#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "weave/backend.hpp"
#include "weave/errors.hpp"
#include "weave/prompts.hpp"
#include "weave/types.hpp"

namespace weave {

/// Knobs for both weaving stages.
///
/// `min_error_freq` below 1 is a fraction of the record count (strict
/// comparison); at or above 1 it is an absolute record count (inclusive).
/// Lower count bounds are advisory and only raise a ClampWarning; upper
/// bounds truncate.
struct WeaveConfig {
  std::size_t group_size = 4;
  double min_error_freq = 4.0;
  std::size_t leaf_min = 5;
  std::size_t leaf_max = 8;
  std::size_t tips_min = 5;
  std::size_t tips_max = 8;
  std::size_t strategies_min = 2;
  std::size_t strategies_max = 4;
  /// Recorded in the book snapshot; the retriever's per-error cap.
  std::size_t tips_per_error = 5;
  std::vector<Dimension> metrics{kAllDimensions.begin(), kAllDimensions.end()};
  RequestOptions request;
  /// Worker threads for independent calls (abstractions, merges in a level).
  std::size_t concurrency = 1;

  void validate() const;
};

/// Leaf abstractions keyed by (record_id, metric, template digest). Leaves do
/// not depend on N_G or the error gate, so hyperparameter sweeps share them.
class LeafCache {
 public:
  using Key = std::tuple<std::string, Dimension, std::string>;

  std::optional<std::vector<ExperienceUnit>> find(const Key& key) const;
  void store(const Key& key, std::vector<ExperienceUnit> units);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<Key, std::vector<ExperienceUnit>> entries_;
};

struct WeaveContext {
  Backend& backend;
  const WeaveConfig& config;
  const PromptLibrary& prompts = PromptLibrary::builtin();
  Diagnostics* diagnostics = nullptr;
  LeafCache* leaf_cache = nullptr;
};

/// Stage 1a: one abstraction call turning a record into level-0 units.
std::vector<ExperienceUnit> abstract_record(const FeedbackRecord& record, Dimension metric,
                                            const WeaveContext& ctx);

/// Stage 1b: hierarchical combination. Consecutive groups of `group_size` are
/// merged level by level until fewer than `group_size` nodes remain. A
/// trailing group of one is carried up unmerged. When `all_levels` is given it
/// receives every unit of the tree, inputs included, in creation order.
std::vector<ExperienceUnit> weave_tree(const std::vector<ExperienceUnit>& units,
                                       const WeaveContext& ctx,
                                       std::vector<ExperienceUnit>* all_levels = nullptr);

/// Number of distinct records carrying each error type.
std::map<std::string, std::size_t> count_error_frequencies(std::span<const FeedbackRecord> records);

/// Error types admitted by the frequency gate.
std::set<std::string> select_errors(const std::map<std::string, std::size_t>& freqs,
                                    std::size_t n_records, double min_error_freq);

/// Stage 2 tips for one (phase, error type). When `relevant_records` is
/// non-empty only pool units derived from those records enter the prompt
/// (falling back to the whole pool if none match).
std::vector<Tip> distill_tips(std::span<const ExperienceUnit> pool, Phase phase,
                              const std::string& error_type, const WeaveContext& ctx,
                              const std::set<std::string>& relevant_records = {});

std::vector<Strategy> distill_strategies(std::span<const Tip> tips_for_phase, Phase phase,
                                         const WeaveContext& ctx);

struct BuildOptions {
  /// The full Stage 1 tree is written here before Stage 2 starts.
  std::optional<std::filesystem::path> pool_path;
};

/// Both weaving stages end to end.
ExperienceBook build_book(std::span<const FeedbackRecord> records, const WeaveContext& ctx,
                          const BuildOptions& options = {});

}  // namespace weave
