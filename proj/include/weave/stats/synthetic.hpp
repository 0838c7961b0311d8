#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "weave/stats/panel.hpp"

namespace weave::stats {

/// An effect vector: explicit values, or draws from N(0, sd) when `values` is
/// empty. Either way the planted vector is centred to sum to zero.
struct EffectSpec {
  std::vector<double> values;
  double sd = 0.0;
};

struct SyntheticParams {
  double mu = 3.0;
  EffectSpec gamma;  // per text
  EffectSpec alpha;  // per evaluator
  EffectSpec beta;   // per run, shared across attributes
  double noise_sd = 0.5;
  std::size_t n_e = 9;
  std::size_t n_j = 3;
  std::size_t n_t = 40;
  std::size_t n_a = 1;
  std::uint64_t seed = 0;
  /// Round and clamp draws to the 1..5 label scale.
  bool label_scale = false;
};

struct PlantedEffects {
  /// Grand mean after absorbing the means of explicit effect vectors.
  double mu = 0.0;
  std::map<std::string, std::vector<double>> gamma;  // by attribute
  std::map<std::string, std::vector<double>> alpha;  // by attribute
  std::vector<double> beta;
};

struct SyntheticPanel {
  ScorePanel panel;
  PlantedEffects planted;
  std::vector<std::string> evaluators;
  std::vector<int> runs;
  std::vector<std::string> texts;
  std::vector<std::string> attributes;
};

/// Deterministic for a fixed seed. Level names sort in generation order
/// (e01.., t001.., runs 1..J).
SyntheticPanel generate_synthetic_panel(const SyntheticParams& params);

}  // namespace weave::stats
