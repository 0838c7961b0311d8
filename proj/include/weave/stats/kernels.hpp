#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Closed-form additive fit on a balanced (evaluator, run, text) cube stored
// row-major as y[(i * n_j + j) * n_t + t].

namespace weave::stats {

struct CubeShape {
  std::size_t n_e = 0;
  std::size_t n_j = 0;
  std::size_t n_t = 0;
  std::size_t size() const noexcept { return n_e * n_j * n_t; }
};

/// Grand mean plus centered marginal means of each factor.
struct MarginalFit {
  double mu = 0.0;
  std::vector<double> alpha;  // per evaluator
  std::vector<double> beta;   // per run
  std::vector<double> gamma;  // per text
};

/// Factors included in a fit; the grand mean is always present.
struct FactorMask {
  bool text = true;
  bool evaluator = true;
  bool run = true;
};

namespace kernels {

/// OpenMP versions.
MarginalFit marginal_means(std::span<const double> y, CubeShape shape);
/// r = y - fitted, with excluded factors left out of `fitted`.
std::vector<double> residuals(std::span<const double> y, CubeShape shape, const MarginalFit& fit,
                              FactorMask mask = {});
double sum_of_squares(std::span<const double> v);

}  // namespace kernels

namespace reference {

/// Single-threaded, single-pass versions kept as test oracles.
MarginalFit marginal_means(std::span<const double> y, CubeShape shape);
std::vector<double> residuals(std::span<const double> y, CubeShape shape, const MarginalFit& fit,
                              FactorMask mask = {});
double sum_of_squares(std::span<const double> v);

}  // namespace reference

}  // namespace weave::stats
