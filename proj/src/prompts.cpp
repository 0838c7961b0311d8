#include "weave/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "weave/digest.hpp"
#include "weave/errors.hpp"

namespace weave {

namespace {

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

}  // namespace

PromptTemplate::PromptTemplate(std::string id, std::string text)
    : id_(std::move(id)), text_(std::move(text)) {
  std::size_t pos = 0;
  while ((pos = text_.find(kOpen, pos)) != std::string::npos) {
    const auto end = text_.find(kClose, pos + kOpen.size());
    if (end == std::string::npos) break;
    auto name = text_.substr(pos + kOpen.size(), end - pos - kOpen.size());
    if (std::find(slots_.begin(), slots_.end(), name) == slots_.end()) slots_.push_back(name);
    pos = end + kClose.size();
  }
}

std::string PromptTemplate::render(const SlotList& values) const {
  auto lookup = [&](std::string_view name) -> const std::string* {
    for (const auto& [k, v] : values)
      if (k == name) return &v;
    return nullptr;
  };
  std::string out;
  out.reserve(text_.size() * 2);
  std::size_t pos = 0;
  while (true) {
    const auto open = text_.find(kOpen, pos);
    if (open == std::string::npos) break;
    const auto close = text_.find(kClose, open + kOpen.size());
    if (close == std::string::npos) break;
    out.append(text_, pos, open - pos);
    const auto name = std::string_view(text_).substr(open + kOpen.size(),
                                                     close - open - kOpen.size());
    const auto* value = lookup(name);
    if (!value)
      throw PrecondError("template '" + id_ + "' slot '" + std::string(name) + "' not provided");
    out += *value;
    pos = close + kClose.size();
  }
  out.append(text_, pos);
  return out;
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = [] {
    PromptLibrary l;
    for (const auto& [id, text] : detail::builtin_prompt_sources())
      l.add(PromptTemplate(std::string(id), std::string(text)));
    return l;
  }();
  return lib;
}

const PromptTemplate& PromptLibrary::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw PrecondError("unknown prompt template '" + std::string(id) + "'");
  return it->second;
}

bool PromptLibrary::contains(std::string_view id) const { return templates_.contains(id); }

void PromptLibrary::add(PromptTemplate t) {
  auto id = t.id();
  templates_.insert_or_assign(std::move(id), std::move(t));
}

void PromptLibrary::load_directory(const std::filesystem::path& dir) {
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    add(PromptTemplate(entry.path().stem().string(), ss.str()));
  }
}

ChatRequest make_request(const PromptTemplate& tmpl, SlotList slots, const RequestOptions& opts) {
  ChatRequest req;
  req.model_id = opts.model_id;
  req.temperature = opts.temperature;
  req.max_tokens = opts.max_tokens;
  req.template_id = tmpl.id();
  req.messages.push_back({Role::User, tmpl.render(slots)});
  req.slot_digest = slot_digest(req.template_id, slots);
  req.slots = std::move(slots);
  return req;
}

}  // namespace weave
