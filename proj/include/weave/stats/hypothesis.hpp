#pragma once

#include <span>
#include <string>
#include <vector>

#include "weave/stats/effects.hpp"
#include "weave/stats/panel.hpp"

namespace weave::stats {

inline constexpr double kAlpha = 0.05;

struct TestReport {
  std::string test_name;
  double statistic = 0.0;
  /// "F(d1, d2)" or "t(d)".
  std::string df;
  double df1 = 0.0;
  double df2 = 0.0;  // 0 for t tests
  double p_value = 1.0;
  bool reject = false;  // at kAlpha
};

struct FResult {
  double f = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p = 1.0;
};

struct TResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

/// Upper tail of F(d1, d2); 0 for +inf.
double f_upper_p(double f, double d1, double d2);
/// Two-sided p of Student t with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

/// Zero spread: t = 0, p = 1 when the mean equals mu0, else t = +-inf, p = 0.
TResult one_sample_t_test(std::span<const double> values, double mu0 = 0.0);
/// Throws DegenerateDesign with fewer than 2 groups or no within-group df.
FResult one_way_anova(const std::vector<std::vector<double>>& groups);
/// Mean-centred Levene: ANOVA on |x - group mean|. Needs 2 values per group.
FResult levene(const std::vector<std::vector<double>>& groups);
/// OLS slope of y on x tested against 0 with n - 2 df.
TResult slope_t_test(std::span<const double> x, std::span<const double> y);
FResult nested_f_test(double sse_full, double df_full, double sse_reduced, double df_reduced);

TestReport make_report(std::string name, const FResult& r);
TestReport make_report(std::string name, const TResult& r);

/// Full additive model against the model without the text factor.
TestReport test_text_effect(const PanelView& view, const EffectDecomposition& full);
/// Full additive model against the model without the evaluator factor.
TestReport test_rater_effect(const PanelView& view, const EffectDecomposition& full);
/// One-sample t on per-(evaluator, text) contrasts: mean of later runs minus
/// the first run. Zero under equal run effects.
TestReport test_run_bias(const PanelView& view);
/// One-way ANOVA by run of residuals from the model without a run factor.
TestReport test_run_stability(const PanelView& view, const EffectDecomposition& no_run);
/// Slope of the same residuals on run index; needs at least 3 runs.
TestReport test_run_trend(const PanelView& view, const EffectDecomposition& no_run);
/// Levene on full-model residuals grouped by evaluator.
TestReport levene_rater_variance(const PanelView& view, const EffectDecomposition& full);
/// Levene on full-model residuals grouped by text.
TestReport levene_text_variance(const PanelView& view, const EffectDecomposition& full);
/// Levene on full-model residuals grouped by run.
TestReport levene_residual_variance(const PanelView& view, const EffectDecomposition& full);

/// All eight tests in a fixed order: text_mean, text_variance, rater_mean,
/// rater_variance, run_bias, run_stability, run_trend, residual_variance.
/// run_trend is skipped with fewer than 3 runs.
std::vector<TestReport> run_battery(const PanelView& view);

/// CSV with header `attribute,test,statistic,df,p_value,reject`.
std::string reports_csv(const std::vector<std::pair<std::string, TestReport>>& rows);

}  // namespace weave::stats
