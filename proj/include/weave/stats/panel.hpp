#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace weave::stats {

/// One judge label Y for (evaluator i, run j, text T, attribute a).
struct Observation {
  std::string evaluator;
  int run = 0;
  std::string text;
  std::string attribute;
  double score = 0.0;

  bool operator==(const Observation&) const = default;
};

/// Set of observations with unique (evaluator, run, text, attribute) cells.
/// Bounded panels hold judge labels in [1, 5]; synthetic continuous panels
/// switch the bound off.
class ScorePanel {
 public:
  explicit ScorePanel(bool bounded = true) : bounded_(bounded) {}

  /// Throws RangeError for out-of-scale scores and SchemaError for duplicates.
  void add(Observation obs);

  const std::vector<Observation>& observations() const noexcept { return obs_; }
  bool bounded() const noexcept { return bounded_; }
  std::size_t size() const noexcept { return obs_.size(); }

  std::vector<std::string> evaluators() const;
  std::vector<int> runs() const;
  std::vector<std::string> texts() const;
  std::vector<std::string> attributes() const;

  bool operator==(const ScorePanel& o) const { return obs_ == o.obs_; }

 private:
  bool bounded_;
  std::vector<Observation> obs_;
  std::set<std::tuple<std::string, int, std::string, std::string>> keys_;
};

/// CSV with header `evaluator,run,text,attribute,score`.
ScorePanel load_panel_csv(const std::filesystem::path& path, bool bounded = true);
void save_panel_csv(const ScorePanel& panel, const std::filesystem::path& path);
std::string panel_csv(const ScorePanel& panel);

/// Dense index of one attribute's cells. Levels are sorted; `cells` keeps the
/// panel's order.
struct PanelView {
  struct Cell {
    std::size_t i = 0;  // evaluator
    std::size_t j = 0;  // run
    std::size_t t = 0;  // text
    double y = 0.0;
  };

  std::string attribute;
  std::vector<std::string> evaluators;
  std::vector<int> runs;
  std::vector<std::string> texts;
  std::vector<Cell> cells;

  PanelView() = default;
  PanelView(const ScorePanel& panel, const std::string& attribute);

  std::size_t n_e() const noexcept { return evaluators.size(); }
  std::size_t n_j() const noexcept { return runs.size(); }
  std::size_t n_t() const noexcept { return texts.size(); }
  /// Every (i, j, t) present exactly once.
  bool balanced() const noexcept { return cells.size() == n_e() * n_j() * n_t(); }
  /// Row-major (i, j, t) cube of a balanced view.
  std::vector<double> cube() const;
  std::size_t cube_index(const Cell& c) const noexcept { return (c.i * n_j() + c.j) * n_t() + c.t; }
};

}  // namespace weave::stats
