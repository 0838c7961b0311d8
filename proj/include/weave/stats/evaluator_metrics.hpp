#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weave/stats/effects.hpp"
#include "weave/stats/panel.hpp"

namespace weave::stats {

struct EvaluatorMetrics {
  std::string evaluator;
  double bias = 0.0;
  double stability = 0.0;
  double precision = 0.0;
  double skewness = 0.0;
  double entropy = 0.0;
  /// Skewness had no defined value (constant labels or n < 3) and was set to 0.
  bool skewness_undefined = false;

  bool operator==(const EvaluatorMetrics&) const = default;
};

/// log2(5), the largest possible label entropy.
double max_label_entropy();

/// Adjusted Fisher-Pearson skewness; nullopt when undefined.
std::optional<double> adjusted_skewness(std::span<const double> values);
/// Base-2 entropy of the label distribution over 1..5. Values are rounded to
/// the nearest label and clamped to the scale.
double label_entropy(std::span<const double> values);
/// Sample (n - 1) variance and standard deviation.
double sample_variance(std::span<const double> values);

/// Per-evaluator diagnostics from one decomposition per attribute (keyed by
/// attribute name).
std::vector<EvaluatorMetrics> evaluator_metrics(
    const ScorePanel& panel, const std::map<std::string, EffectDecomposition>& fits);
/// Fits every attribute and computes the diagnostics.
std::vector<EvaluatorMetrics> evaluator_metrics(const ScorePanel& panel);

inline constexpr std::array<const char*, 5> kMetricNames = {"bias", "stability", "precision",
                                                            "skewness", "entropy"};

struct RankRow {
  std::string evaluator;
  std::array<int, 5> ranks{};  // kMetricNames order
  int total = 0;
};

/// Competition ranks per metric (ascending for bias, stability, precision and
/// |skewness|; descending for entropy), sorted by total then evaluator id.
std::vector<RankRow> rank_models(std::span<const EvaluatorMetrics> metrics);

/// Competition ranking (1-based, ties share the minimum rank) of `values`.
std::vector<int> competition_ranks(std::span<const double> values, bool ascending = true);

struct CostPoint {
  std::string evaluator;
  double cost = 0.0;
  double score = 0.0;
};

/// Pareto-efficient evaluators (lower cost, higher score), sorted by cost.
std::vector<std::string> cost_frontier(std::span<const CostPoint> points);

/// CSV `evaluator,bias,stability,precision,skewness,entropy`. Rejects negative
/// bias, stability, precision or entropy, and entropy above log2(5).
std::vector<EvaluatorMetrics> load_metrics_csv(const std::filesystem::path& path);
std::string metrics_csv(std::span<const EvaluatorMetrics> metrics);
/// CSV `evaluator,cost,score`.
std::vector<CostPoint> load_costs_csv(const std::filesystem::path& path);

/// CSV `evaluator,bias,stability,precision,skewness,entropy,total` of ranks.
std::string rank_csv(std::span<const RankRow> rows);
/// Aligned text table of the same.
std::string rank_table_text(std::span<const RankRow> rows);

}  // namespace weave::stats
