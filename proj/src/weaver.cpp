#include "weave/weaver.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "json_reply.hpp"
#include "weave/concurrency.hpp"
#include "weave/digest.hpp"
#include "weave/store.hpp"

namespace weave {

using json = nlohmann::json;

namespace {

enum class ReplyState { Ok, Empty, Bad };

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::pair<ReplyState, std::vector<std::string>> classify_strings(std::string_view reply) {
  auto j = detail::extract_json(reply);
  if (!j || !j->is_array()) return {ReplyState::Bad, {}};
  std::vector<std::string> out;
  for (const auto& item : *j) {
    if (!item.is_string()) return {ReplyState::Bad, {}};
    if (auto t = trim(item.get<std::string>()); !t.empty()) out.push_back(std::move(t));
  }
  return {out.empty() ? ReplyState::Empty : ReplyState::Ok, std::move(out)};
}

/// One call plus one repair retry. Empty arrays count as failures to retry;
/// the second reply decides which error is raised.
template <class BadErr, class EmptyErr>
std::vector<std::string> ask_strings(Backend& backend, const ChatRequest& req) {
  auto first = backend.complete(req);
  auto [s1, v1] = classify_strings(first.content);
  if (s1 == ReplyState::Ok) return v1;
  auto second = backend.complete(detail::with_repair(req, first.content, detail::kRepairStringArray));
  auto [s2, v2] = classify_strings(second.content);
  if (s2 == ReplyState::Ok) return v2;
  const auto msg = "template '" + req.template_id + "': reply unusable after one repair retry";
  if (s2 == ReplyState::Empty) throw EmptyErr(msg);
  throw BadErr(msg);
}

void warn(const WeaveContext& ctx, WarningKind kind, std::string msg) {
  if (ctx.diagnostics) ctx.diagnostics->warn(kind, std::move(msg));
}

template <class T>
void clamp_count(std::vector<T>& items, std::size_t lo, std::size_t hi, const WeaveContext& ctx,
                 std::string_view what) {
  if (items.size() > hi) items.resize(hi);
  if (items.size() < lo)
    warn(ctx, WarningKind::Clamp,
         fmt::format("{}: {} items, below the advisory minimum {}", what, items.size(), lo));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string describe_feedback(const FeedbackRecord& r) {
  std::string out = fmt::format("Metric: {}\nScore: {}/5\n", to_string(r.metric), r.score);
  if (!r.comment.empty()) out += "Comment: " + r.comment + "\n";
  if (!r.error_annotations.empty()) {
    out += "Annotated errors:\n";
    for (const auto& a : r.error_annotations)
      out += "- " + a.error_type + (a.description.empty() ? "" : ": " + a.description) + "\n";
  }
  out += "Original text:\n" + r.source_text + "\n";
  if (!r.revised_text.empty()) out += "Revised text:\n" + r.revised_text + "\n";
  return out;
}

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += items[i];
  }
  return out;
}

}  // namespace

void WeaveConfig::validate() const {
  if (group_size < 2) throw PrecondError("group size must be >= 2");
  if (!(min_error_freq > 0.0)) throw PrecondError("minimum error frequency must be > 0");
  if (leaf_min > leaf_max) throw PrecondError("leaf_min exceeds leaf_max");
  if (tips_min > tips_max) throw PrecondError("tips_min exceeds tips_max");
  if (strategies_min > strategies_max) throw PrecondError("strategies_min exceeds strategies_max");
  if (leaf_max == 0 || tips_max == 0 || strategies_max == 0)
    throw PrecondError("upper count bounds must be positive");
  if (tips_per_error == 0) throw PrecondError("tips_per_error must be >= 1");
  if (metrics.empty()) throw PrecondError("metric set is empty");
}

std::optional<std::vector<ExperienceUnit>> LeafCache::find(const Key& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void LeafCache::store(const Key& key, std::vector<ExperienceUnit> units) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(key, std::move(units));
}

std::size_t LeafCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<ExperienceUnit> abstract_record(const FeedbackRecord& record, Dimension metric,
                                            const WeaveContext& ctx) {
  if (record.metric != metric)
    throw PrecondError("record " + record.record_id + " carries " +
                       std::string(to_string(record.metric)) + ", not " +
                       std::string(to_string(metric)));
  const auto& cfg = ctx.config;
  const auto& tmpl = ctx.prompts.get("abstract_v1");
  const LeafCache::Key key{record.record_id, metric, sha256_hex(tmpl.text())};
  if (ctx.leaf_cache) {
    if (auto hit = ctx.leaf_cache->find(key)) return *hit;
  }

  SlotList slots = {{"metric", lower(to_string(metric))},
                    {"feedback", describe_feedback(record)},
                    {"count_range", fmt::format("{} to {}", cfg.leaf_min, cfg.leaf_max)}};
  const auto req = make_request(tmpl, std::move(slots), cfg.request);
  auto items = ask_strings<ParseError, EmptyAbstraction>(ctx.backend, req);
  clamp_count(items, cfg.leaf_min, cfg.leaf_max, ctx, "abstraction of " + record.record_id);

  std::vector<ExperienceUnit> units;
  units.reserve(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    ExperienceUnit u;
    u.unit_id = fmt::format("leaf/{}/{}/{}", record.record_id, to_string(metric), k);
    u.metric = metric;
    u.text = std::move(items[k]);
    u.level = 0;
    u.provenance = {record.record_id};
    units.push_back(std::move(u));
  }
  if (ctx.leaf_cache) ctx.leaf_cache->store(key, units);
  return units;
}

std::vector<ExperienceUnit> weave_tree(const std::vector<ExperienceUnit>& units,
                                       const WeaveContext& ctx,
                                       std::vector<ExperienceUnit>* all_levels) {
  const auto& cfg = ctx.config;
  if (cfg.group_size < 2) throw PrecondError("group size must be >= 2");
  if (all_levels) all_levels->insert(all_levels->end(), units.begin(), units.end());
  if (units.empty()) return {};
  const auto metric = units.front().metric;
  for (const auto& u : units)
    if (u.metric != metric) throw PrecondError("weave_tree inputs span several metrics");

  const auto& tmpl = ctx.prompts.get("combine_v1");
  const std::size_t n_g = cfg.group_size;
  std::vector<ExperienceUnit> current = units;
  int round = 0;

  while (current.size() >= n_g) {
    ++round;
    // Consecutive groups; a trailing singleton is carried up unmerged.
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    for (std::size_t start = 0; start < current.size(); start += n_g)
      groups.emplace_back(start, std::min(start + n_g, current.size()));

    std::vector<ExperienceUnit> next(groups.size());
    std::vector<char> merged(groups.size(), 0);
    parallel_for(groups.size(), cfg.concurrency, [&](std::size_t g) {
      const auto [lo, hi] = groups[g];
      if (hi - lo == 1) {
        next[g] = current[lo];
        return;
      }
      std::string sets;
      for (std::size_t k = lo; k < hi; ++k)
        sets += fmt::format("Experience set {}:\n{}\n\n", k - lo + 1, current[k].text);
      SlotList slots = {{"set_count", std::to_string(hi - lo)}, {"experience_sets", sets}};
      const auto req = make_request(tmpl, std::move(slots), cfg.request);
      auto items = ask_strings<MergeParseError, MergeParseError>(ctx.backend, req);

      ExperienceUnit u;
      u.metric = metric;
      u.text = join_lines(items);
      int max_child = 0;
      for (std::size_t k = lo; k < hi; ++k) {
        u.children.push_back(current[k].unit_id);
        u.provenance.insert(current[k].provenance.begin(), current[k].provenance.end());
        max_child = std::max(max_child, current[k].level);
      }
      u.level = max_child + 1;
      u.unit_id = fmt::format("node/{}/r{}/{}", to_string(metric), round, g);
      next[g] = std::move(u);
      merged[g] = 1;
    });
    if (all_levels)
      for (std::size_t g = 0; g < next.size(); ++g)
        if (merged[g]) all_levels->push_back(next[g]);
    current = std::move(next);
  }
  return current;
}

std::map<std::string, std::size_t> count_error_frequencies(std::span<const FeedbackRecord> records) {
  std::map<std::string, std::size_t> freqs;
  for (const auto& r : records) {
    std::set<std::string> seen;
    for (const auto& a : r.error_annotations) seen.insert(a.error_type);
    for (const auto& e : seen) ++freqs[e];
  }
  return freqs;
}

std::set<std::string> select_errors(const std::map<std::string, std::size_t>& freqs,
                                    std::size_t n_records, double min_error_freq) {
  if (n_records == 0) throw PrecondError("select_errors needs at least one record");
  if (!(min_error_freq > 0.0)) throw PrecondError("minimum error frequency must be > 0");
  std::set<std::string> out;
  for (const auto& [error, count] : freqs) {
    const bool admit = min_error_freq < 1.0
                           ? static_cast<double>(count) > min_error_freq * static_cast<double>(n_records)
                           : static_cast<double>(count) >= min_error_freq;
    if (admit) out.insert(error);
  }
  return out;
}

std::vector<Tip> distill_tips(std::span<const ExperienceUnit> pool, Phase phase,
                              const std::string& error_type, const WeaveContext& ctx,
                              const std::set<std::string>& relevant_records) {
  if (pool.empty()) throw PrecondError("distill_tips needs a non-empty experience pool");
  const auto& cfg = ctx.config;

  std::vector<const ExperienceUnit*> placed;
  if (!relevant_records.empty()) {
    for (const auto& u : pool) {
      const bool hit = std::any_of(u.provenance.begin(), u.provenance.end(),
                                   [&](const auto& id) { return relevant_records.contains(id); });
      if (hit) placed.push_back(&u);
    }
  }
  if (placed.empty())
    for (const auto& u : pool) placed.push_back(&u);

  std::set<std::string> placed_ids;
  std::string listing;
  for (const auto* u : placed) {
    placed_ids.insert(u->unit_id);
    listing += fmt::format("[{}] {}\n", u->unit_id, u->text);
  }

  SlotList slots = {{"phase_description", std::string(phase_description(phase))},
                    {"error_type", error_type},
                    {"experiences", listing}};
  const auto req = make_request(ctx.prompts.get("tips_v1"), std::move(slots), cfg.request);

  // Items are plain strings, or objects naming the units that back them.
  auto parse = [&](std::string_view reply) -> std::optional<std::vector<Tip>> {
    auto j = detail::extract_json(reply);
    if (!j || !j->is_array()) return std::nullopt;
    std::vector<Tip> tips;
    for (const auto& item : *j) {
      Tip t;
      t.phase = phase;
      t.error_type = error_type;
      if (item.is_string()) {
        t.text = trim(item.get<std::string>());
      } else if (item.is_object()) {
        auto text = item.contains("text") ? item["text"] : item.value("tip", json());
        if (!text.is_string()) return std::nullopt;
        t.text = trim(text.get<std::string>());
        if (auto s = item.find("supporting_units"); s != item.end() && s->is_array())
          for (const auto& id : *s)
            if (id.is_string() && placed_ids.contains(id.get<std::string>()))
              t.supporting_units.insert(id.get<std::string>());
      } else {
        return std::nullopt;
      }
      if (t.text.empty()) continue;
      if (t.supporting_units.empty()) t.supporting_units = placed_ids;
      tips.push_back(std::move(t));
    }
    if (tips.empty()) return std::nullopt;
    return tips;
  };
  auto tips = detail::complete_parsed<ParseError>(ctx.backend, req, parse,
                                                  detail::kRepairStringArray);
  clamp_count(tips, cfg.tips_min, cfg.tips_max, ctx,
              fmt::format("tips for ({}, {})", to_string(phase), error_type));
  return tips;
}

std::vector<Strategy> distill_strategies(std::span<const Tip> tips_for_phase, Phase phase,
                                         const WeaveContext& ctx) {
  if (tips_for_phase.empty()) throw PrecondError("distill_strategies needs at least one tip");
  const auto& cfg = ctx.config;
  std::string listing;
  for (std::size_t i = 0; i < tips_for_phase.size(); ++i)
    listing += fmt::format("{}. [{}] {}\n", i + 1, tips_for_phase[i].error_type,
                           tips_for_phase[i].text);
  SlotList slots = {{"phase_description", std::string(phase_description(phase))},
                    {"tip_count", std::to_string(tips_for_phase.size())},
                    {"tips", listing}};
  const auto req = make_request(ctx.prompts.get("strategy_v1"), std::move(slots), cfg.request);
  auto items = ask_strings<ParseError, ParseError>(ctx.backend, req);
  clamp_count(items, cfg.strategies_min, cfg.strategies_max, ctx,
              fmt::format("strategies for {}", to_string(phase)));
  std::vector<Strategy> out;
  for (auto& s : items) out.push_back({phase, std::move(s)});
  return out;
}

ExperienceBook build_book(std::span<const FeedbackRecord> records, const WeaveContext& ctx,
                          const BuildOptions& options) {
  const auto& cfg = ctx.config;
  cfg.validate();
  if (records.empty()) throw PrecondError("build_book needs at least one record");
  for (const auto& r : records)
    if (std::find(cfg.metrics.begin(), cfg.metrics.end(), r.metric) == cfg.metrics.end())
      throw PrecondError("record " + r.record_id + " uses metric " +
                         std::string(to_string(r.metric)) + " outside the configured set");

  // Stage 1: abstraction per (record, metric), then one tree per metric.
  std::vector<ExperienceUnit> pool;
  std::vector<ExperienceUnit> tree;
  for (const auto metric : cfg.metrics) {
    std::vector<const FeedbackRecord*> subset;
    for (const auto& r : records)
      if (r.metric == metric) subset.push_back(&r);
    if (subset.empty()) continue;
    std::vector<std::vector<ExperienceUnit>> leaves(subset.size());
    parallel_for(subset.size(), cfg.concurrency,
                 [&](std::size_t i) { leaves[i] = abstract_record(*subset[i], metric, ctx); });
    std::vector<ExperienceUnit> flat;
    for (auto& l : leaves) std::move(l.begin(), l.end(), std::back_inserter(flat));
    auto top = weave_tree(flat, ctx, &tree);
    std::move(top.begin(), top.end(), std::back_inserter(pool));
  }
  if (options.pool_path) save_pool(tree, *options.pool_path);

  ExperienceBook book;
  book.version = 1;
  book.config = {cfg.group_size, cfg.min_error_freq, cfg.tips_per_error};
  book.record_count = records.size();
  book.error_frequencies = count_error_frequencies(records);
  book.units = pool;

  // Stage 2: tips per (phase, admitted error), then strategies per phase.
  const auto selected = select_errors(book.error_frequencies, records.size(), cfg.min_error_freq);
  if (selected.empty()) {
    warn(ctx, WarningKind::Build, "no error type passed the frequency gate; tips and strategies skipped");
    return book;
  }
  std::map<std::string, std::set<std::string>> carriers;
  for (const auto& r : records)
    for (const auto& a : r.error_annotations) carriers[a.error_type].insert(r.record_id);

  std::vector<TipKey> keys;
  for (const auto phase : kAllPhases)
    for (const auto& e : selected) keys.emplace_back(phase, e);
  std::vector<std::vector<Tip>> tips(keys.size());
  parallel_for(keys.size(), cfg.concurrency, [&](std::size_t k) {
    tips[k] = distill_tips(pool, keys[k].first, keys[k].second, ctx, carriers.at(keys[k].second));
  });
  for (std::size_t k = 0; k < keys.size(); ++k) book.tips[keys[k]] = std::move(tips[k]);

  for (const auto phase : kAllPhases) {
    std::vector<Tip> phase_tips;
    for (const auto& [key, list] : book.tips)
      if (key.first == phase) phase_tips.insert(phase_tips.end(), list.begin(), list.end());
    book.strategies[phase] = distill_strategies(phase_tips, phase, ctx);
  }
  check_book(book);
  return book;
}

}  // namespace weave
