#include "weave/stats/calibration.hpp"

#include <fmt/format.h>

#include <cstdint>
#include <exception>
#include <vector>

#include "weave/stats/hypothesis.hpp"

namespace weave::stats {

namespace {

using Tally = std::vector<std::pair<std::string, bool>>;

Tally simulate_once(SyntheticParams params, std::uint64_t seed) {
  params.seed = seed;
  const auto sp = generate_synthetic_panel(params);
  Tally out;
  for (const auto& attr : sp.attributes)
    for (const auto& r : run_battery(PanelView(sp.panel, attr)))
      out.emplace_back(r.test_name, r.reject);
  return out;
}

void merge(CalibrationResult& res, const Tally& t) {
  for (const auto& [name, reject] : t) {
    ++res.trials[name];
    res.rejections[name] += reject ? 1 : 0;
  }
}

}  // namespace

double CalibrationResult::rate(const std::string& test) const {
  auto it = trials.find(test);
  if (it == trials.end() || it->second == 0) return 0.0;
  auto r = rejections.find(test);
  return static_cast<double>(r == rejections.end() ? 0 : r->second) /
         static_cast<double>(it->second);
}

CalibrationResult calibrate(const SyntheticParams& params, std::size_t simulations,
                            std::uint64_t base_seed) {
  std::vector<Tally> tallies(simulations);
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(simulations);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      tallies[static_cast<std::size_t>(k)] =
          simulate_once(params, base_seed + static_cast<std::uint64_t>(k));
    } catch (...) {
#pragma omp critical(weave_calibration_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  CalibrationResult res;
  res.simulations = simulations;
  for (const auto& t : tallies) merge(res, t);
  return res;
}

namespace reference {

CalibrationResult calibrate(const SyntheticParams& params, std::size_t simulations,
                            std::uint64_t base_seed) {
  CalibrationResult res;
  res.simulations = simulations;
  for (std::size_t k = 0; k < simulations; ++k) merge(res, simulate_once(params, base_seed + k));
  return res;
}

}  // namespace reference

std::string calibration_csv(const CalibrationResult& r) {
  std::string out = "test,trials,rejections,rate\n";
  for (const auto& [name, n] : r.trials)
    out += fmt::format("{},{},{},{}\n", name, n, r.rejections.at(name), r.rate(name));
  return out;
}

}  // namespace weave::stats
