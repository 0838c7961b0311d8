#include "json_reply.hpp"

#include "weave/digest.hpp"

namespace weave::detail {

using json = nlohmann::json;

std::optional<json> extract_json(std::string_view reply) {
  // Fast path: the whole reply is JSON.
  if (auto j = json::parse(reply, nullptr, false); !j.is_discarded() && j.is_structured()) return j;

  const auto start = reply.find_first_of("[{");
  if (start == std::string_view::npos) return std::nullopt;
  const char open = reply[start];
  const char close = open == '[' ? ']' : '}';
  // Try successively shorter candidates ending at a matching close bracket.
  for (auto end = reply.rfind(close); end != std::string_view::npos && end > start;
       end = reply.rfind(close, end - 1)) {
    auto j = json::parse(reply.substr(start, end - start + 1), nullptr, false);
    if (!j.is_discarded()) return j;
    if (end == 0) break;
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> parse_string_array(std::string_view reply) {
  auto j = extract_json(reply);
  if (!j || !j->is_array() || j->empty()) return std::nullopt;
  std::vector<std::string> out;
  out.reserve(j->size());
  for (const auto& item : *j) {
    if (!item.is_string()) return std::nullopt;
    out.push_back(item.get<std::string>());
  }
  return out;
}

ChatRequest with_repair(const ChatRequest& req, std::string_view rejected,
                        std::string_view instruction) {
  ChatRequest out = req;
  out.messages.push_back({Role::Assistant, std::string(rejected)});
  out.messages.push_back({Role::User, std::string(instruction)});
  out.slots.emplace_back("__repair", std::string(instruction));
  out.slot_digest = slot_digest(out.template_id, out.slots);
  return out;
}

}  // namespace weave::detail
