#include "weave/stats/hypothesis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "weave/errors.hpp"

namespace weave::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Ratio of two sums of squares with an exact-zero guard for noise-free data.
double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? kInf : 0.0;
}

template <class Key>
std::vector<std::vector<double>> group_residuals(const PanelView& v, const EffectDecomposition& d,
                                                 Key key, std::size_t levels) {
  std::vector<std::vector<double>> g(levels);
  for (std::size_t k = 0; k < v.cells.size(); ++k) g[key(v.cells[k])].push_back(d.residuals[k]);
  return g;
}

}  // namespace

double f_upper_p(double f, double d1, double d2) {
  if (std::isnan(f)) return 1.0;
  if (f == kInf) return 0.0;
  if (f <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), f));
}

double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double p =
      2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::fabs(t)));
  return std::clamp(p, 0.0, 1.0);
}

TResult one_sample_t_test(std::span<const double> values, double mu0) {
  const auto n = values.size();
  if (n < 2) throw DegenerateDesign("one-sample t test needs at least 2 values");
  const double m = mean(values);
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  TResult r;
  r.df = static_cast<double>(n - 1);
  const double diff = m - mu0;
  if (se > 0.0) r.t = diff / se;
  else if (std::fabs(diff) > 0.0) r.t = diff > 0 ? kInf : -kInf;
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

FResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  std::size_t k = 0, n = 0;
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    ++k;
    n += g.size();
    total += std::accumulate(g.begin(), g.end(), 0.0);
  }
  if (k < 2) throw DegenerateDesign("ANOVA needs at least 2 non-empty groups");
  if (n <= k) throw DegenerateDesign("ANOVA needs more observations than groups");
  const double grand = total / static_cast<double>(n);
  double between = 0.0, within = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    const double m = mean(g);
    between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) within += (x - m) * (x - m);
  }
  FResult r;
  r.df1 = static_cast<double>(k - 1);
  r.df2 = static_cast<double>(n - k);
  r.f = safe_ratio(between / r.df1, within / r.df2);
  r.p = f_upper_p(r.f, r.df1, r.df2);
  return r;
}

FResult levene(const std::vector<std::vector<double>>& groups) {
  std::vector<std::vector<double>> dev;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    if (g.size() < 2) throw DegenerateDesign("Levene's test needs at least 2 values per group");
    const double m = mean(g);
    auto& d = dev.emplace_back();
    for (double x : g) d.push_back(std::fabs(x - m));
  }
  return one_way_anova(dev);
}

TResult slope_t_test(std::span<const double> x, std::span<const double> y) {
  const auto n = x.size();
  if (n != y.size()) throw PrecondError("slope test needs paired values");
  if (n < 3) throw DegenerateDesign("slope test needs at least 3 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx <= 0.0) throw DegenerateDesign("slope test needs at least 2 distinct x values");
  const double b = sxy / sxx;
  double sse = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = y[k] - my - b * (x[k] - mx);
    sse += e * e;
  }
  TResult r;
  r.df = static_cast<double>(n - 2);
  const double se = std::sqrt(sse / r.df / sxx);
  if (se > 0.0) r.t = b / se;
  else if (b != 0.0) r.t = b > 0 ? kInf : -kInf;
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

FResult nested_f_test(double sse_full, double df_full, double sse_reduced, double df_reduced) {
  if (df_full <= 0.0 || df_reduced <= df_full)
    throw DegenerateDesign("nested F test needs 0 < df_full < df_reduced");
  FResult r;
  r.df1 = df_reduced - df_full;
  r.df2 = df_full;
  // Rounding can leave a tiny negative difference when the factor explains nothing.
  const double delta = std::max(0.0, sse_reduced - sse_full);
  r.f = safe_ratio(delta / r.df1, sse_full / r.df2);
  r.p = f_upper_p(r.f, r.df1, r.df2);
  return r;
}

TestReport make_report(std::string name, const FResult& r) {
  return {std::move(name), r.f,   fmt::format("F({}, {})", r.df1, r.df2), r.df1, r.df2, r.p,
          r.p < kAlpha};
}

TestReport make_report(std::string name, const TResult& r) {
  return {std::move(name), r.t, fmt::format("t({})", r.df), r.df, 0.0, r.p, r.p < kAlpha};
}

namespace {

TestReport factor_test(std::string name, const PanelView& v, const EffectDecomposition& full,
                       FactorMask reduced) {
  const double n = static_cast<double>(v.cells.size());
  const double df_full = n - static_cast<double>(parameter_count(v, full.mask));
  const double df_red = n - static_cast<double>(parameter_count(v, reduced));
  const auto red = fit_effects(v, reduced);
  return make_report(std::move(name), nested_f_test(full.sse(), df_full, red.sse(), df_red));
}

}  // namespace

TestReport test_text_effect(const PanelView& v, const EffectDecomposition& full) {
  return factor_test("text_mean", v, full, {.text = false, .evaluator = true, .run = true});
}

TestReport test_rater_effect(const PanelView& v, const EffectDecomposition& full) {
  return factor_test("rater_mean", v, full, {.text = true, .evaluator = false, .run = true});
}

TestReport test_run_bias(const PanelView& v) {
  if (v.n_j() < 2) throw DegenerateDesign("run bias test needs at least 2 runs");
  // (evaluator, text) -> first-run value and later-run values
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::vector<double>, std::vector<double>>>
      by_cell;
  for (const auto& c : v.cells) {
    auto& slot = by_cell[{c.i, c.t}];
    (c.j == 0 ? slot.first : slot.second).push_back(c.y);
  }
  std::vector<double> d;
  for (const auto& [_, s] : by_cell)
    if (!s.first.empty() && !s.second.empty()) d.push_back(mean(s.second) - s.first.front());
  if (d.size() < 2) throw DegenerateDesign("run bias test needs at least 2 paired cells");
  return make_report("run_bias", one_sample_t_test(d, 0.0));
}

TestReport test_run_stability(const PanelView& v, const EffectDecomposition& no_run) {
  if (v.n_j() < 2) throw DegenerateDesign("run stability test needs at least 2 runs");
  auto groups = group_residuals(v, no_run, [](const auto& c) { return c.j; }, v.n_j());
  for (const auto& g : groups)
    if (g.size() < 2) throw DegenerateDesign("run stability test needs 2 observations per run");
  return make_report("run_stability", one_way_anova(groups));
}

TestReport test_run_trend(const PanelView& v, const EffectDecomposition& no_run) {
  if (v.n_j() < 3) throw DegenerateDesign("run trend test needs at least 3 runs");
  std::vector<double> x, y;
  x.reserve(v.cells.size());
  y.reserve(v.cells.size());
  for (std::size_t k = 0; k < v.cells.size(); ++k) {
    x.push_back(static_cast<double>(v.cells[k].j));
    y.push_back(no_run.residuals[k]);
  }
  return make_report("run_trend", slope_t_test(x, y));
}

TestReport levene_rater_variance(const PanelView& v, const EffectDecomposition& full) {
  return make_report("rater_variance",
                     levene(group_residuals(v, full, [](const auto& c) { return c.i; }, v.n_e())));
}

TestReport levene_text_variance(const PanelView& v, const EffectDecomposition& full) {
  return make_report("text_variance",
                     levene(group_residuals(v, full, [](const auto& c) { return c.t; }, v.n_t())));
}

TestReport levene_residual_variance(const PanelView& v, const EffectDecomposition& full) {
  return make_report("residual_variance",
                     levene(group_residuals(v, full, [](const auto& c) { return c.j; }, v.n_j())));
}

std::vector<TestReport> run_battery(const PanelView& v) {
  const auto full = fit_effects(v);
  const auto no_run = fit_effects(v, {.text = true, .evaluator = true, .run = false});
  std::vector<TestReport> out;
  out.push_back(test_text_effect(v, full));
  out.push_back(levene_text_variance(v, full));
  out.push_back(test_rater_effect(v, full));
  out.push_back(levene_rater_variance(v, full));
  out.push_back(test_run_bias(v));
  out.push_back(test_run_stability(v, no_run));
  if (v.n_j() >= 3) out.push_back(test_run_trend(v, no_run));
  out.push_back(levene_residual_variance(v, full));
  return out;
}

std::string reports_csv(const std::vector<std::pair<std::string, TestReport>>& rows) {
  std::string out = "attribute,test,statistic,df,p_value,reject\n";
  for (const auto& [attr, r] : rows)
    out += fmt::format("{},{},{},\"{}\",{},{}\n", attr, r.test_name, r.statistic, r.df, r.p_value,
                       r.reject ? "true" : "false");
  return out;
}

}  // namespace weave::stats
