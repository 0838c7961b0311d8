#include "weave/backend.hpp"

#include "weave/errors.hpp"

namespace weave {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

void validate(const ChatRequest& request) {
  if (request.messages.empty()) throw PrecondError("chat request has no messages");
  if (request.messages.front().role == Role::Assistant)
    throw PrecondError("chat request must open with a system or user message");
  if (request.temperature < 0.0) throw PrecondError("temperature must be >= 0");
  if (request.max_tokens <= 0) throw PrecondError("max_tokens must be positive");
}

void ScriptedBackend::register_script(const std::string& template_id,
                                      const std::string& slot_digest, std::string reply) {
  auto key = std::make_pair(template_id, slot_digest);
  if (auto it = scripts_.find(key); it != scripts_.end()) {
    if (it->second != reply)
      throw DuplicateScript("script already registered for " + template_id + "/" + slot_digest);
    return;
  }
  scripts_.emplace(std::move(key), std::move(reply));
}

void ScriptedBackend::register_handler(const std::string& template_id, Handler handler) {
  handlers_[template_id] = std::move(handler);
}

void ScriptedBackend::register_default(const std::string& template_id, std::string reply) {
  defaults_[template_id] = std::move(reply);
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  validate(request);
  {
    std::lock_guard lock(count_mu_);
    ++counts_[request.template_id];
  }
  ChatResponse resp;
  if (auto it = scripts_.find({request.template_id, request.slot_digest}); it != scripts_.end()) {
    resp.content = it->second;
  } else if (auto h = handlers_.find(request.template_id); h != handlers_.end()) {
    resp.content = h->second(request);
  } else if (auto d = defaults_.find(request.template_id); d != defaults_.end()) {
    resp.content = d->second;
  } else {
    throw UnscriptedRequest("no script for template '" + request.template_id + "' digest " +
                            request.slot_digest);
  }
  std::size_t prompt_chars = 0;
  for (const auto& m : request.messages) prompt_chars += m.content.size();
  // Rough token estimate so cost accounting has something to sum.
  resp.prompt_tokens = static_cast<std::int64_t>(prompt_chars / 4);
  resp.completion_tokens = static_cast<std::int64_t>(resp.content.size() / 4);
  return resp;
}

std::size_t ScriptedBackend::calls(const std::string& template_id) const {
  std::lock_guard lock(count_mu_);
  auto it = counts_.find(template_id);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t ScriptedBackend::total_calls() const {
  std::lock_guard lock(count_mu_);
  std::size_t n = 0;
  for (const auto& [_, c] : counts_) n += c;
  return n;
}

}  // namespace weave
