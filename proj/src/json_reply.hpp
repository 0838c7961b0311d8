#pragma once

// Helpers for turning free-form model replies into structured values.

#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "weave/backend.hpp"

namespace weave::detail {

/// Parses the first JSON array or object in `reply`, tolerating markdown code
/// fences and chatter around it.
std::optional<nlohmann::json> extract_json(std::string_view reply);

/// Non-empty JSON array of strings.
std::optional<std::vector<std::string>> parse_string_array(std::string_view reply);

/// Copy of `req` extended with the rejected reply and a repair instruction as
/// follow-up turns. The instruction also joins the slot list so the retry has
/// its own digest.
ChatRequest with_repair(const ChatRequest& req, std::string_view rejected,
                        std::string_view instruction);

/// Sends `req`; if `parse` yields nothing, retries once with `instruction`
/// appended, then throws `Err`.
template <class Err, class Parse>
auto complete_parsed(Backend& backend, const ChatRequest& req, Parse parse,
                     std::string_view instruction)
    -> typename decltype(parse(std::string_view{}))::value_type {
  auto first = backend.complete(req);
  if (auto v = parse(first.content)) return std::move(*v);
  auto second = backend.complete(with_repair(req, first.content, instruction));
  if (auto v = parse(second.content)) return std::move(*v);
  throw Err("unparseable reply for template '" + req.template_id + "' after one repair retry");
}

inline constexpr std::string_view kRepairStringArray =
    "Your previous reply could not be parsed. Reply with only a non-empty JSON array of strings.";

}  // namespace weave::detail
