#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "weave/backend.hpp"

namespace weave {

/// A prompt with `{{name}}` slots.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  PromptTemplate(std::string id, std::string text);

  const std::string& id() const noexcept { return id_; }
  const std::string& text() const noexcept { return text_; }
  /// Slot names in order of first appearance.
  const std::vector<std::string>& slots() const noexcept { return slots_; }

  /// Substitutes every slot. Throws PrecondError when a declared slot is
  /// missing from `values`; extra entries are ignored.
  std::string render(const SlotList& values) const;

 private:
  std::string id_;
  std::string text_;
  std::vector<std::string> slots_;
};

/// Template registry. `builtin()` holds the templates compiled from prompts/.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();

  const PromptTemplate& get(std::string_view id) const;
  bool contains(std::string_view id) const;
  void add(PromptTemplate t);
  /// Adds or replaces templates from every `<id>.txt` file in `dir`.
  void load_directory(const std::filesystem::path& dir);

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct RequestOptions {
  std::string model_id;
  double temperature = 0.0;
  int max_tokens = 2048;
};

/// Renders `tmpl` as a single user message. `slots` lists the template's slots
/// (declared order), optionally followed by unrendered metadata slots that only
/// feed the digest.
ChatRequest make_request(const PromptTemplate& tmpl, SlotList slots, const RequestOptions& opts);

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& builtin_prompt_sources();
}

}  // namespace weave
