#pragma once

#include <string>
#include <string_view>

#include "weave/backend.hpp"

namespace weave {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Stable key for a filled template: SHA-256 over the template id, then every
/// slot name, then every slot value, each field length-prefixed so that no
/// concatenation of different inputs can collide.
std::string slot_digest(std::string_view template_id, const SlotList& slots);

}  // namespace weave
