#include "weave/stats/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "weave/errors.hpp"
#include "weave/types.hpp"

namespace weave::stats {

namespace {

// Returns the centred vector; the removed mean is added to `mu_shift`.
std::vector<double> draw(const EffectSpec& spec, std::size_t n, std::mt19937_64& rng,
                         double& mu_shift, const char* what) {
  std::vector<double> v;
  if (!spec.values.empty()) {
    if (spec.values.size() != n)
      throw PrecondError(fmt::format("{} has {} values for {} levels", what, spec.values.size(), n));
    v = spec.values;
  } else {
    std::normal_distribution<double> nd(0.0, 1.0);
    v.resize(n);
    for (auto& x : v) x = spec.sd * nd(rng);
  }
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  for (auto& x : v) x -= m;
  if (!spec.values.empty()) mu_shift += m;
  return v;
}

int digits(std::size_t n) { return static_cast<int>(std::to_string(n).size()); }

}  // namespace

SyntheticPanel generate_synthetic_panel(const SyntheticParams& p) {
  if (p.n_e < 2 || p.n_j < 2 || p.n_t < 2 || p.n_a < 1)
    throw PrecondError("synthetic panels need at least 2 evaluators, runs and texts");
  if (p.noise_sd < 0.0) throw PrecondError("noise_sd must be >= 0");

  SyntheticPanel out{ScorePanel(p.label_scale), {}, {}, {}, {}, {}};
  for (std::size_t i = 0; i < p.n_e; ++i)
    out.evaluators.push_back(fmt::format("e{:0{}}", i + 1, std::max(2, digits(p.n_e))));
  for (std::size_t j = 0; j < p.n_j; ++j) out.runs.push_back(static_cast<int>(j + 1));
  for (std::size_t t = 0; t < p.n_t; ++t)
    out.texts.push_back(fmt::format("t{:0{}}", t + 1, std::max(3, digits(p.n_t))));
  for (std::size_t a = 0; a < p.n_a; ++a)
    out.attributes.push_back(p.n_a <= kAllDimensions.size()
                                 ? std::string(to_string(kAllDimensions[a]))
                                 : fmt::format("a{:0{}}", a + 1, digits(p.n_a)));

  std::mt19937_64 rng(p.seed);
  double mu = p.mu;
  double beta_shift = 0.0;
  out.planted.beta = draw(p.beta, p.n_j, rng, beta_shift, "beta");
  mu += beta_shift;
  // Explicit gamma/alpha vectors are shared by all attributes, so their means
  // shift mu once.
  double gamma_shift = 0.0, alpha_shift = 0.0;
  for (const auto& attr : out.attributes) {
    double gs = 0.0, as = 0.0;
    out.planted.gamma[attr] = draw(p.gamma, p.n_t, rng, gs, "gamma");
    out.planted.alpha[attr] = draw(p.alpha, p.n_e, rng, as, "alpha");
    gamma_shift = gs;
    alpha_shift = as;
  }
  mu += gamma_shift + alpha_shift;
  out.planted.mu = mu;

  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& attr : out.attributes) {
    const auto& g = out.planted.gamma[attr];
    const auto& a = out.planted.alpha[attr];
    for (std::size_t i = 0; i < p.n_e; ++i)
      for (std::size_t j = 0; j < p.n_j; ++j)
        for (std::size_t t = 0; t < p.n_t; ++t) {
          double y = mu + g[t] + a[i] + out.planted.beta[j] + p.noise_sd * noise(rng);
          if (p.label_scale) y = std::clamp(std::round(y), 1.0, 5.0);
          out.panel.add({out.evaluators[i], out.runs[j], out.texts[t], attr, y});
        }
  }
  return out;
}

}  // namespace weave::stats
