#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "weave/stats/synthetic.hpp"

namespace weave::stats {

/// Rejection counts of each battery test over repeated synthetic panels.
struct CalibrationResult {
  std::size_t simulations = 0;
  /// Tests run per test name (one per attribute per simulation).
  std::map<std::string, std::size_t> trials;
  std::map<std::string, std::size_t> rejections;

  double rate(const std::string& test) const;
  bool operator==(const CalibrationResult&) const = default;
};

/// Simulation k uses seed `base_seed + k`. Simulations run in parallel.
CalibrationResult calibrate(const SyntheticParams& params, std::size_t simulations,
                            std::uint64_t base_seed);

namespace reference {
/// Serial version; returns exactly what the parallel one does.
CalibrationResult calibrate(const SyntheticParams& params, std::size_t simulations,
                            std::uint64_t base_seed);
}  // namespace reference

/// CSV `test,trials,rejections,rate`.
std::string calibration_csv(const CalibrationResult& r);

}  // namespace weave::stats
