#include "weave/stats/effects.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>

#include "weave/errors.hpp"

namespace weave::stats {

namespace {

template <class Levels, class Key>
double lookup(const Levels& levels, const std::vector<double>& effects, const Key& key) {
  auto it = std::lower_bound(levels.begin(), levels.end(), key);
  if (it == levels.end() || *it != key) throw PrecondError("unknown factor level");
  return effects[static_cast<std::size_t>(it - levels.begin())];
}

void require_levels(const PanelView& v, FactorMask mask) {
  if (v.cells.empty()) throw DegenerateDesign(fmt::format("attribute '{}' has no cells", v.attribute));
  if ((mask.evaluator && v.n_e() < 2) || (mask.run && v.n_j() < 2) || (mask.text && v.n_t() < 2))
    throw DegenerateDesign(fmt::format(
        "attribute '{}' needs at least 2 evaluators, runs and texts (have {}, {}, {})",
        v.attribute, v.n_e(), v.n_j(), v.n_t()));
}

EffectDecomposition skeleton(const PanelView& v, FactorMask mask) {
  EffectDecomposition d;
  d.attribute = v.attribute;
  d.texts = v.texts;
  d.evaluators = v.evaluators;
  d.runs = v.runs;
  d.gamma.assign(v.n_t(), 0.0);
  d.alpha.assign(v.n_e(), 0.0);
  d.beta.assign(v.n_j(), 0.0);
  d.mask = mask;
  return d;
}

}  // namespace

double EffectDecomposition::gamma_of(const std::string& text) const {
  return lookup(texts, gamma, text);
}
double EffectDecomposition::alpha_of(const std::string& evaluator) const {
  return lookup(evaluators, alpha, evaluator);
}
double EffectDecomposition::beta_of(int run) const { return lookup(runs, beta, run); }

double EffectDecomposition::sse() const { return reference::sum_of_squares(residuals); }

std::size_t parameter_count(const PanelView& v, FactorMask mask) {
  std::size_t p = 1;
  if (mask.text) p += v.n_t() - 1;
  if (mask.evaluator) p += v.n_e() - 1;
  if (mask.run) p += v.n_j() - 1;
  return p;
}

EffectDecomposition fit_effects(const PanelView& v, FactorMask mask) {
  require_levels(v, mask);
  if (!v.balanced()) return fit_effects_least_squares(v, mask);
  const CubeShape shape{v.n_e(), v.n_j(), v.n_t()};
  const auto y = v.cube();
  auto m = kernels::marginal_means(y, shape);
  auto d = skeleton(v, mask);
  d.mu = m.mu;
  if (mask.text) d.gamma = std::move(m.gamma);
  if (mask.evaluator) d.alpha = std::move(m.alpha);
  if (mask.run) d.beta = std::move(m.beta);
  const MarginalFit used{d.mu, d.alpha, d.beta, d.gamma};
  const auto r = kernels::residuals(y, shape, used, mask);
  d.residuals.resize(v.cells.size());
  for (std::size_t k = 0; k < v.cells.size(); ++k) d.residuals[k] = r[v.cube_index(v.cells[k])];
  return d;
}

EffectDecomposition fit_effects(const ScorePanel& panel, const std::string& attribute) {
  return fit_effects(PanelView(panel, attribute));
}

EffectDecomposition fit_effects_least_squares(const PanelView& v, FactorMask mask) {
  require_levels(v, mask);
  const auto n = static_cast<Eigen::Index>(v.cells.size());
  const auto p = static_cast<Eigen::Index>(parameter_count(v, mask));
  if (n < p)
    throw DegenerateDesign(
        fmt::format("attribute '{}': {} cells for {} parameters", v.attribute, n, p));

  // Column offsets of each factor block.
  const Eigen::Index off_t = 1;
  const Eigen::Index off_e = off_t + (mask.text ? static_cast<Eigen::Index>(v.n_t()) - 1 : 0);
  const Eigen::Index off_j = off_e + (mask.evaluator ? static_cast<Eigen::Index>(v.n_e()) - 1 : 0);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd y(n);
  auto code = [&](Eigen::Index row, Eigen::Index off, std::size_t level, std::size_t levels) {
    if (level + 1 < levels) {
      x(row, off + static_cast<Eigen::Index>(level)) = 1.0;
    } else {
      for (std::size_t k = 0; k + 1 < levels; ++k) x(row, off + static_cast<Eigen::Index>(k)) = -1.0;
    }
  };
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& c = v.cells[static_cast<std::size_t>(r)];
    x(r, 0) = 1.0;
    if (mask.text) code(r, off_t, c.t, v.n_t());
    if (mask.evaluator) code(r, off_e, c.i, v.n_e());
    if (mask.run) code(r, off_j, c.j, v.n_j());
    y(r) = c.y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p)
    throw DegenerateDesign(fmt::format("attribute '{}': design has rank {} < {}", v.attribute,
                                       qr.rank(), p));
  const Eigen::VectorXd b = qr.solve(y);

  auto d = skeleton(v, mask);
  d.mu = b(0);
  auto expand = [&](Eigen::Index off, std::size_t levels, std::vector<double>& out) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < levels; ++k) {
      out[k] = b(off + static_cast<Eigen::Index>(k));
      sum += out[k];
    }
    out[levels - 1] = -sum;
  };
  if (mask.text) expand(off_t, v.n_t(), d.gamma);
  if (mask.evaluator) expand(off_e, v.n_e(), d.alpha);
  if (mask.run) expand(off_j, v.n_j(), d.beta);
  d.residuals.resize(v.cells.size());
  for (std::size_t k = 0; k < v.cells.size(); ++k) {
    const auto& c = v.cells[k];
    d.residuals[k] = c.y - d.mu - d.gamma[c.t] - d.alpha[c.i] - d.beta[c.j];
  }
  return d;
}

}  // namespace weave::stats
