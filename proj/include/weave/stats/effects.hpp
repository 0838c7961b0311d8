#pragma once

#include <string>
#include <vector>

#include "weave/stats/kernels.hpp"
#include "weave/stats/panel.hpp"

namespace weave::stats {

/// Y = mu + gamma_T + alpha_i + beta_j + r for one attribute, with every
/// effect vector summing to zero. Effects of factors left out of the fit are 0.
struct EffectDecomposition {
  std::string attribute;
  double mu = 0.0;
  std::vector<std::string> texts;
  std::vector<double> gamma;
  std::vector<std::string> evaluators;
  std::vector<double> alpha;
  std::vector<int> runs;
  std::vector<double> beta;
  /// Parallel to PanelView::cells.
  std::vector<double> residuals;
  FactorMask mask;

  double gamma_of(const std::string& text) const;
  double alpha_of(const std::string& evaluator) const;
  double beta_of(int run) const;
  double sse() const;
};

/// Closed-form group means on balanced views, least squares otherwise.
/// Throws DegenerateDesign when any factor has a single level.
EffectDecomposition fit_effects(const PanelView& view, FactorMask mask = {});
EffectDecomposition fit_effects(const ScorePanel& panel, const std::string& attribute);

/// Least squares with effect (sum-to-zero) coding; valid for any panel.
/// Throws DegenerateDesign when the design is not of full rank.
EffectDecomposition fit_effects_least_squares(const PanelView& view, FactorMask mask = {});

/// Number of fitted parameters: 1 + (levels - 1) per included factor.
std::size_t parameter_count(const PanelView& view, FactorMask mask);

}  // namespace weave::stats
