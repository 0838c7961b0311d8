#include "weave/retriever.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <sstream>

#include "weave/errors.hpp"

namespace weave {

namespace {

std::set<std::string> tokens(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.insert(std::move(tok));
  }
  return out;
}

}  // namespace

std::size_t RetrievalContext::tip_count() const {
  std::size_t n = 0;
  for (const auto& [_, tips] : tips_by_error) n += tips.size();
  return n;
}

RetrievalContext retrieve(const ExperienceBook& book, Phase phase,
                          std::span<const std::string> error_types, std::size_t tips_per_error) {
  if (tips_per_error < 1) throw PrecondError("tips_per_error must be >= 1");
  RetrievalContext ctx;
  ctx.phase = phase;
  ctx.tips_per_error = tips_per_error;
  if (auto it = book.strategies.find(phase); it != book.strategies.end())
    ctx.strategies = it->second;

  std::set<std::string> seen;
  for (const auto& error : error_types) {
    if (!seen.insert(error).second) continue;
    auto it = book.tips.find({phase, error});
    if (it == book.tips.end()) continue;
    const auto& stored = it->second;
    std::vector<std::size_t> order(stored.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return stored[a].supporting_units.size() > stored[b].supporting_units.size();
    });
    order.resize(std::min(order.size(), tips_per_error));
    std::vector<Tip> picked;
    for (auto i : order) picked.push_back(stored[i]);
    ctx.tips_by_error.emplace_back(error, std::move(picked));
  }
  return ctx;
}

std::string render(const RetrievalContext& context) {
  std::string out = "=== Strategy for Quality Control ===\n";
  for (const auto& s : context.strategies) out += "--- " + s.text + "\n";
  out += "\n=== Detailed Tips (Retrieved " + std::to_string(context.tip_count()) +
         " tips from Layer 2) ===\n";
  for (const auto& [error, tips] : context.tips_by_error) {
    out += "[" + error + "] Errors:\n";
    for (const auto& t : tips) out += "--- " + t.text + "\n";
  }
  return out;
}

double token_jaccard(const std::string& a, const std::string& b) {
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  std::size_t inter = 0;
  for (const auto& t : ta) inter += tb.contains(t);
  const auto uni = ta.size() + tb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<FeedbackRecord> baseline_similar_records(std::span<const FeedbackRecord> memory,
                                                     const std::string& query, std::size_t k) {
  if (k < 1) throw PrecondError("k must be >= 1");
  std::vector<std::pair<double, const FeedbackRecord*>> scored;
  scored.reserve(memory.size());
  for (const auto& r : memory) scored.emplace_back(token_jaccard(query, r.source_text), &r);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->record_id < b.second->record_id;
  });
  std::vector<FeedbackRecord> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(*scored[i].second);
  return out;
}

}  // namespace weave
