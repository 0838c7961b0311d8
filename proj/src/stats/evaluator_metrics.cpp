#include "weave/stats/evaluator_metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../csv.hpp"
#include "weave/errors.hpp"
#include "weave/store.hpp"

namespace weave::stats {

double max_label_entropy() { return std::log2(5.0); }

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw DegenerateDesign("sample variance needs at least 2 values");
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

std::optional<double> adjusted_skewness(std::span<const double> v) {
  const auto n = static_cast<double>(v.size());
  if (v.size() < 3) return std::nullopt;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 1e-300) return std::nullopt;
  const double g1 = m3 / std::pow(m2, 1.5);
  return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

double label_entropy(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::array<std::size_t, 5> counts{};
  for (double y : values) {
    const long label = std::clamp(std::lround(y), 1L, 5L);
    ++counts[static_cast<std::size_t>(label - 1)];
  }
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(values.size());
    h -= p * std::log2(p);
  }
  return h;
}

std::vector<EvaluatorMetrics> evaluator_metrics(
    const ScorePanel& panel, const std::map<std::string, EffectDecomposition>& fits) {
  const auto evaluators = panel.evaluators();
  if (evaluators.empty()) throw DegenerateDesign("panel has no evaluators");

  struct Acc {
    std::vector<double> abs_alpha;
    std::vector<double> residuals;
    std::vector<double> raw;
    std::map<int, std::vector<double>> run_effects;
  };
  std::map<std::string, Acc> acc;

  for (const auto& attr : panel.attributes()) {
    auto it = fits.find(attr);
    if (it == fits.end()) throw PrecondError(fmt::format("no fit for attribute '{}'", attr));
    const auto& fit = it->second;
    const PanelView view(panel, attr);
    if (fit.residuals.size() != view.cells.size())
      throw PrecondError(fmt::format("fit for attribute '{}' does not match the panel", attr));
    for (std::size_t i = 0; i < view.n_e(); ++i) acc[view.evaluators[i]].abs_alpha.push_back(
        std::fabs(fit.alpha_of(view.evaluators[i])));
    for (std::size_t k = 0; k < view.cells.size(); ++k) {
      auto& a = acc[view.evaluators[view.cells[k].i]];
      a.residuals.push_back(fit.residuals[k]);
      a.raw.push_back(view.cells[k].y);
    }
  }

  // Run effects from a text + run model fitted to each evaluator's own cells.
  for (const auto& ev : evaluators) {
    ScorePanel own(panel.bounded());
    for (const auto& o : panel.observations())
      if (o.evaluator == ev) own.add(o);
    for (const auto& attr : own.attributes()) {
      const PanelView view(own, attr);
      if (view.n_j() < 2 || view.n_t() < 2) continue;
      const auto fit = fit_effects(view, {.text = true, .evaluator = false, .run = true});
      for (std::size_t j = 0; j < view.n_j(); ++j)
        acc[ev].run_effects[view.runs[j]].push_back(fit.beta[j]);
    }
  }

  std::vector<EvaluatorMetrics> out;
  for (const auto& ev : evaluators) {
    const auto& a = acc[ev];
    EvaluatorMetrics m;
    m.evaluator = ev;
    m.bias = std::accumulate(a.abs_alpha.begin(), a.abs_alpha.end(), 0.0) /
             static_cast<double>(a.abs_alpha.size());
    std::vector<double> runs;
    for (const auto& [_, effects] : a.run_effects)
      runs.push_back(std::accumulate(effects.begin(), effects.end(), 0.0) /
                     static_cast<double>(effects.size()));
    if (runs.size() < 2)
      throw DegenerateDesign(fmt::format("evaluator '{}' has fewer than 2 runs", ev));
    m.stability = sample_variance(runs);
    m.precision = std::sqrt(sample_variance(a.residuals));
    if (auto s = adjusted_skewness(a.raw)) {
      m.skewness = *s;
    } else {
      m.skewness_undefined = true;
    }
    m.entropy = label_entropy(a.raw);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<EvaluatorMetrics> evaluator_metrics(const ScorePanel& panel) {
  std::map<std::string, EffectDecomposition> fits;
  for (const auto& attr : panel.attributes()) fits.emplace(attr, fit_effects(panel, attr));
  return evaluator_metrics(panel, fits);
}

std::vector<int> competition_ranks(std::span<const double> values, bool ascending) {
  std::vector<int> ranks(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    int better = 0;
    for (double other : values)
      better += ascending ? (other < values[k]) : (other > values[k]);
    ranks[k] = better + 1;
  }
  return ranks;
}

std::vector<RankRow> rank_models(std::span<const EvaluatorMetrics> metrics) {
  std::array<std::vector<double>, 5> cols;
  for (const auto& m : metrics) {
    cols[0].push_back(m.bias);
    cols[1].push_back(m.stability);
    cols[2].push_back(m.precision);
    cols[3].push_back(std::fabs(m.skewness));
    cols[4].push_back(m.entropy);
  }
  std::array<std::vector<int>, 5> ranks;
  for (std::size_t c = 0; c < 5; ++c) ranks[c] = competition_ranks(cols[c], c != 4);

  std::vector<RankRow> rows;
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    RankRow r;
    r.evaluator = metrics[k].evaluator;
    for (std::size_t c = 0; c < 5; ++c) {
      r.ranks[c] = ranks[c][k];
      r.total += ranks[c][k];
    }
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), [](const RankRow& a, const RankRow& b) {
    return std::tie(a.total, a.evaluator) < std::tie(b.total, b.evaluator);
  });
  return rows;
}

std::vector<std::string> cost_frontier(std::span<const CostPoint> points) {
  for (const auto& p : points)
    if (!(p.cost > 0.0)) throw PrecondError(fmt::format("cost of '{}' must be > 0", p.evaluator));
  std::vector<const CostPoint*> keep;
  for (const auto& p : points) {
    const bool dominated = std::any_of(points.begin(), points.end(), [&](const CostPoint& q) {
      return q.cost <= p.cost && q.score >= p.score && (q.cost < p.cost || q.score > p.score);
    });
    if (!dominated) keep.push_back(&p);
  }
  std::sort(keep.begin(), keep.end(), [](const CostPoint* a, const CostPoint* b) {
    return std::tie(a->cost, a->evaluator) < std::tie(b->cost, b->evaluator);
  });
  std::vector<std::string> out;
  for (const auto* p : keep) out.push_back(p->evaluator);
  return out;
}

std::vector<EvaluatorMetrics> load_metrics_csv(const std::filesystem::path& path) {
  const auto src = path.string();
  const auto table = detail::parse_csv(
      read_file(path), src, {"evaluator", "bias", "stability", "precision", "skewness", "entropy"});
  std::vector<EvaluatorMetrics> out;
  for (const auto& [line, f] : table.rows) {
    auto num = [&](const char* name) {
      return detail::parse_csv_double(f[table.column.at(name)], src, line);
    };
    EvaluatorMetrics m;
    m.evaluator = f[table.column.at("evaluator")];
    m.bias = num("bias");
    m.stability = num("stability");
    m.precision = num("precision");
    m.skewness = num("skewness");
    m.entropy = num("entropy");
    if (m.bias < 0 || m.stability < 0 || m.precision < 0 || m.entropy < 0)
      throw SchemaError(fmt::format("{}:{}: negative metric for '{}'", src, line, m.evaluator),
                        line);
    if (m.entropy > max_label_entropy() + 1e-12)
      throw SchemaError(fmt::format("{}:{}: entropy {} of '{}' exceeds log2(5)", src, line,
                                    m.entropy, m.evaluator),
                        line);
    out.push_back(std::move(m));
  }
  return out;
}

std::string metrics_csv(std::span<const EvaluatorMetrics> metrics) {
  std::string out = "evaluator,bias,stability,precision,skewness,entropy,skewness_undefined\n";
  for (const auto& m : metrics)
    out += fmt::format("{},{},{},{},{},{},{}\n", detail::csv_field(m.evaluator), m.bias,
                       m.stability, m.precision, m.skewness, m.entropy,
                       m.skewness_undefined ? "true" : "false");
  return out;
}

std::vector<CostPoint> load_costs_csv(const std::filesystem::path& path) {
  const auto src = path.string();
  const auto table = detail::parse_csv(read_file(path), src, {"evaluator", "cost", "score"});
  std::vector<CostPoint> out;
  for (const auto& [line, f] : table.rows)
    out.push_back({f[table.column.at("evaluator")],
                   detail::parse_csv_double(f[table.column.at("cost")], src, line),
                   detail::parse_csv_double(f[table.column.at("score")], src, line)});
  return out;
}

std::string rank_csv(std::span<const RankRow> rows) {
  std::string out = "evaluator,bias,stability,precision,skewness,entropy,total\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{}\n", detail::csv_field(r.evaluator), r.ranks[0],
                       r.ranks[1], r.ranks[2], r.ranks[3], r.ranks[4], r.total);
  return out;
}

std::string rank_table_text(std::span<const RankRow> rows) {
  std::size_t w = 9;
  for (const auto& r : rows) w = std::max(w, r.evaluator.size());
  std::string out = fmt::format("{:<{}}  {:>5} {:>9} {:>9} {:>8} {:>7} {:>5}\n", "evaluator", w,
                                "bias", "stability", "precision", "skewness", "entropy", "total");
  for (const auto& r : rows)
    out += fmt::format("{:<{}}  {:>5} {:>9} {:>9} {:>8} {:>7} {:>5}\n", r.evaluator, w, r.ranks[0],
                       r.ranks[1], r.ranks[2], r.ranks[3], r.ranks[4], r.total);
  return out;
}

}  // namespace weave::stats
