#pragma once

// Deterministic stand-ins for model replies used across the test suites.

#include <fmt/format.h>

#include <algorithm>
#include <functional>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "weave/backend.hpp"
#include "weave/types.hpp"

namespace fixtures {

inline std::string slot(const weave::ChatRequest& req, const std::string& name) {
  for (const auto& [k, v] : req.slots)
    if (k == name) return v;
  return {};
}

inline std::size_t stable_hash(const std::string& s) {
  std::size_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

/// Abstraction: 5..8 items unique to the feedback text.
inline std::string abstract_reply(const weave::ChatRequest& req) {
  const auto fb = slot(req, "feedback");
  const auto h = stable_hash(fb);
  const std::size_t n = 5 + h % 4;
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t k = 0; k < n; ++k)
    arr.push_back(fmt::format("{} lesson {:x}-{}", slot(req, "metric"), h % 0xfffff, k));
  return arr.dump();
}

/// Merge: the union of child items in order, capped at 10.
inline std::string combine_reply(const weave::ChatRequest& req) {
  std::vector<std::string> items;
  std::set<std::string> seen;
  for (const auto& line : lines_of(slot(req, "experience_sets"))) {
    if (line.empty() || line.rfind("Experience set ", 0) == 0) continue;
    if (seen.insert(line).second) items.push_back(line);
  }
  if (items.size() > 10) items.resize(10);
  return nlohmann::json(items).dump();
}

/// Tips: 5..8 objects, tip k backed by every listed unit with index = k mod n.
inline std::string tips_reply(const weave::ChatRequest& req) {
  std::vector<std::string> ids;
  for (const auto& line : lines_of(slot(req, "experiences"))) {
    if (line.size() < 3 || line[0] != '[') continue;
    ids.push_back(line.substr(1, line.find(']') - 1));
  }
  const auto err = slot(req, "error_type");
  const auto phase = slot(req, "phase_description");
  const std::size_t n = 5 + stable_hash(err + phase) % 4;
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t k = 0; k < n; ++k) {
    nlohmann::json support = nlohmann::json::array();
    for (std::size_t i = k % std::max<std::size_t>(ids.size(), 1); i < ids.size(); i += n)
      support.push_back(ids[i]);
    arr.push_back({{"text", fmt::format("During {}, watch for {} (tip {})", phase, err, k + 1)},
                   {"supporting_units", support}});
  }
  return arr.dump();
}

inline std::string strategy_reply(const weave::ChatRequest& req) {
  const auto phase = slot(req, "phase_description");
  const std::size_t n = 2 + stable_hash(phase) % 3;
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t k = 0; k < n; ++k) arr.push_back(fmt::format("{} strategy {}", phase, k + 1));
  return arr.dump();
}

inline void install_weaving(weave::ScriptedBackend& b) {
  b.register_handler("abstract_v1", abstract_reply);
  b.register_handler("combine_v1", combine_reply);
  b.register_handler("tips_v1", tips_reply);
  b.register_handler("strategy_v1", strategy_reply);
}

inline const std::vector<std::string>& error_vocabulary() {
  static const std::vector<std::string> v = {
      "Improper Terminology Usage", "Laterality Error", "Missing Measurement",
      "Inconsistent Impression",   "Typographical Error", "Omitted Finding"};
  return v;
}

/// `n` records cycling through the four metrics. Error types are drawn with
/// decreasing frequency so frequency gates split them.
inline std::vector<weave::FeedbackRecord> make_records(std::size_t n, unsigned seed = 7) {
  std::mt19937 rng(seed);
  const auto& vocab = error_vocabulary();
  std::vector<weave::FeedbackRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    weave::FeedbackRecord r;
    r.record_id = fmt::format("r{:03}", i);
    r.metric = weave::kAllDimensions[i % 4];
    r.source_text = fmt::format("Chest film {}: heart size normal, lungs clear, case {}.", i,
                                rng() % 1000);
    r.revised_text = r.source_text + " No acute findings.";
    r.score = 1 + static_cast<int>(rng() % 5);
    r.comment = fmt::format("Reviewer note {}", i);
    for (std::size_t e = 0; e < vocab.size(); ++e)
      if (rng() % 100 < 60 / (e + 1)) r.error_annotations.push_back({vocab[e], "seen"});
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fixtures
