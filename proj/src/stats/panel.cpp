#include "weave/stats/panel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "../csv.hpp"
#include "weave/errors.hpp"
#include "weave/store.hpp"

namespace weave::stats {

namespace {

template <class T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void ScorePanel::add(Observation obs) {
  if (!std::isfinite(obs.score))
    throw RangeError(fmt::format("non-finite score for ({}, {}, {}, {})", obs.evaluator, obs.run,
                                 obs.text, obs.attribute));
  if (bounded_ && (obs.score < 1.0 || obs.score > 5.0))
    throw RangeError(fmt::format("score {} outside [1, 5] for ({}, {}, {}, {})", obs.score,
                                 obs.evaluator, obs.run, obs.text, obs.attribute));
  if (!keys_.emplace(obs.evaluator, obs.run, obs.text, obs.attribute).second)
    throw SchemaError(fmt::format("duplicate cell ({}, {}, {}, {})", obs.evaluator, obs.run,
                                  obs.text, obs.attribute));
  obs_.push_back(std::move(obs));
}

std::vector<std::string> ScorePanel::evaluators() const {
  std::vector<std::string> v;
  for (const auto& o : obs_) v.push_back(o.evaluator);
  return sorted_unique(std::move(v));
}

std::vector<int> ScorePanel::runs() const {
  std::vector<int> v;
  for (const auto& o : obs_) v.push_back(o.run);
  return sorted_unique(std::move(v));
}

std::vector<std::string> ScorePanel::texts() const {
  std::vector<std::string> v;
  for (const auto& o : obs_) v.push_back(o.text);
  return sorted_unique(std::move(v));
}

std::vector<std::string> ScorePanel::attributes() const {
  std::vector<std::string> v;
  for (const auto& o : obs_) v.push_back(o.attribute);
  return sorted_unique(std::move(v));
}

ScorePanel load_panel_csv(const std::filesystem::path& path, bool bounded) {
  const auto src = path.string();
  const auto table = detail::parse_csv(read_file(path), src,
                                       {"evaluator", "run", "text", "attribute", "score"});
  const auto& col = table.column;
  ScorePanel panel(bounded);
  for (const auto& [lineno, fields] : table.rows) {
    Observation o;
    o.evaluator = fields[col.at("evaluator")];
    o.text = fields[col.at("text")];
    o.attribute = fields[col.at("attribute")];
    const auto& run = fields[col.at("run")];
    const auto [p, ec] = std::from_chars(run.data(), run.data() + run.size(), o.run);
    if (ec != std::errc{} || p != run.data() + run.size())
      throw SchemaError(fmt::format("{}:{}: bad run '{}'", src, lineno, run), lineno);
    o.score = detail::parse_csv_double(fields[col.at("score")], src, lineno);
    try {
      panel.add(std::move(o));
    } catch (const Error& e) {
      throw SchemaError(fmt::format("{}:{}: {}", src, lineno, e.what()), lineno);
    }
  }
  return panel;
}

std::string panel_csv(const ScorePanel& panel) {
  std::string out = "evaluator,run,text,attribute,score\n";
  for (const auto& o : panel.observations())
    out += fmt::format("{},{},{},{},{}\n", detail::csv_field(o.evaluator), o.run, detail::csv_field(o.text),
                       detail::csv_field(o.attribute), o.score);
  return out;
}

void save_panel_csv(const ScorePanel& panel, const std::filesystem::path& path) {
  write_atomic(path, panel_csv(panel));
}

PanelView::PanelView(const ScorePanel& panel, const std::string& attr) : attribute(attr) {
  for (const auto& o : panel.observations()) {
    if (o.attribute != attr) continue;
    evaluators.push_back(o.evaluator);
    runs.push_back(o.run);
    texts.push_back(o.text);
  }
  evaluators = sorted_unique(std::move(evaluators));
  runs = sorted_unique(std::move(runs));
  texts = sorted_unique(std::move(texts));
  auto pos = [](const auto& levels, const auto& v) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) -
                                    levels.begin());
  };
  for (const auto& o : panel.observations()) {
    if (o.attribute != attr) continue;
    cells.push_back({pos(evaluators, o.evaluator), pos(runs, o.run), pos(texts, o.text), o.score});
  }
}

std::vector<double> PanelView::cube() const {
  std::vector<double> y(n_e() * n_j() * n_t(), 0.0);
  for (const auto& c : cells) y[cube_index(c)] = c.y;
  return y;
}

}  // namespace weave::stats
