#include "weave/stats/kernels.hpp"

#include <omp.h>

#include <cstdint>

namespace weave::stats {

namespace kernels {

MarginalFit marginal_means(std::span<const double> y, CubeShape s) {
  const auto ne = static_cast<std::int64_t>(s.n_e);
  const auto nj = static_cast<std::int64_t>(s.n_j);
  const auto nt = static_cast<std::int64_t>(s.n_t);
  MarginalFit f;
  f.alpha.assign(s.n_e, 0.0);
  f.beta.assign(s.n_j, 0.0);
  f.gamma.assign(s.n_t, 0.0);
  const double* p = y.data();

  double total = 0.0;
#pragma omp parallel for reduction(+ : total) schedule(static)
  for (std::int64_t k = 0; k < ne * nj * nt; ++k) total += p[k];
  f.mu = total / static_cast<double>(s.size());

#pragma omp parallel
  {
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < ne; ++i) {
      double acc = 0.0;
      for (std::int64_t k = i * nj * nt; k < (i + 1) * nj * nt; ++k) acc += p[k];
      f.alpha[i] = acc / static_cast<double>(nj * nt) - f.mu;
    }
#pragma omp for schedule(static) nowait
    for (std::int64_t j = 0; j < nj; ++j) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < ne; ++i)
        for (std::int64_t t = 0; t < nt; ++t) acc += p[(i * nj + j) * nt + t];
      f.beta[j] = acc / static_cast<double>(ne * nt) - f.mu;
    }
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < nt; ++t) {
      double acc = 0.0;
      for (std::int64_t ij = 0; ij < ne * nj; ++ij) acc += p[ij * nt + t];
      f.gamma[t] = acc / static_cast<double>(ne * nj) - f.mu;
    }
  }
  return f;
}

std::vector<double> residuals(std::span<const double> y, CubeShape s, const MarginalFit& f,
                              FactorMask mask) {
  const auto ne = static_cast<std::int64_t>(s.n_e);
  const auto nj = static_cast<std::int64_t>(s.n_j);
  const auto nt = static_cast<std::int64_t>(s.n_t);
  std::vector<double> r(s.size());
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t i = 0; i < ne; ++i)
    for (std::int64_t j = 0; j < nj; ++j) {
      const double base =
          f.mu + (mask.evaluator ? f.alpha[i] : 0.0) + (mask.run ? f.beta[j] : 0.0);
      const std::int64_t row = (i * nj + j) * nt;
      for (std::int64_t t = 0; t < nt; ++t)
        r[row + t] = y[row + t] - base - (mask.text ? f.gamma[t] : 0.0);
    }
  return r;
}

double sum_of_squares(std::span<const double> v) {
  const auto n = static_cast<std::int64_t>(v.size());
  const double* p = v.data();
  double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static)
  for (std::int64_t k = 0; k < n; ++k) acc += p[k] * p[k];
  return acc;
}

}  // namespace kernels

namespace reference {

MarginalFit marginal_means(std::span<const double> y, CubeShape s) {
  MarginalFit f;
  f.alpha.assign(s.n_e, 0.0);
  f.beta.assign(s.n_j, 0.0);
  f.gamma.assign(s.n_t, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < s.n_e; ++i)
    for (std::size_t j = 0; j < s.n_j; ++j)
      for (std::size_t t = 0; t < s.n_t; ++t) {
        const double v = y[(i * s.n_j + j) * s.n_t + t];
        total += v;
        f.alpha[i] += v;
        f.beta[j] += v;
        f.gamma[t] += v;
      }
  f.mu = total / static_cast<double>(s.size());
  for (auto& a : f.alpha) a = a / static_cast<double>(s.n_j * s.n_t) - f.mu;
  for (auto& b : f.beta) b = b / static_cast<double>(s.n_e * s.n_t) - f.mu;
  for (auto& g : f.gamma) g = g / static_cast<double>(s.n_e * s.n_j) - f.mu;
  return f;
}

std::vector<double> residuals(std::span<const double> y, CubeShape s, const MarginalFit& f,
                              FactorMask mask) {
  std::vector<double> r(s.size());
  for (std::size_t i = 0; i < s.n_e; ++i)
    for (std::size_t j = 0; j < s.n_j; ++j)
      for (std::size_t t = 0; t < s.n_t; ++t) {
        const std::size_t k = (i * s.n_j + j) * s.n_t + t;
        double fitted = f.mu;
        if (mask.evaluator) fitted += f.alpha[i];
        if (mask.run) fitted += f.beta[j];
        if (mask.text) fitted += f.gamma[t];
        r[k] = y[k] - fitted;
      }
  return r;
}

double sum_of_squares(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace reference

}  // namespace weave::stats
