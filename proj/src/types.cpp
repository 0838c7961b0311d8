#include "weave/types.hpp"

#include <algorithm>
#include <cctype>

#include "weave/errors.hpp"

namespace weave {

namespace {

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Detection: return "Detection";
    case Phase::Revision: return "Revision";
    case Phase::SelfCritique: return "SelfCritique";
  }
  return "?";
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Correctness: return "Correctness";
    case Dimension::Formatting: return "Formatting";
    case Dimension::Meaningfulness: return "Meaningfulness";
    case Dimension::Readability: return "Readability";
  }
  return "?";
}

std::string_view phase_description(Phase p) {
  switch (p) {
    case Phase::Detection: return "error detection";
    case Phase::Revision: return "text revision";
    case Phase::SelfCritique: return "self-critique";
  }
  return "?";
}

Phase parse_phase(std::string_view s) {
  const auto f = fold(s);
  if (f == "detection") return Phase::Detection;
  if (f == "revision") return Phase::Revision;
  if (f == "selfcritique" || f == "critique" || f == "selfcritic") return Phase::SelfCritique;
  throw SchemaError("unknown phase '" + std::string(s) + "'");
}

Dimension parse_dimension(std::string_view s) {
  const auto f = fold(s);
  if (f == "correctness") return Dimension::Correctness;
  if (f == "formatting" || f == "format") return Dimension::Formatting;
  if (f == "meaningfulness" || f == "usefulness") return Dimension::Meaningfulness;
  if (f == "readability") return Dimension::Readability;
  throw SchemaError("unknown dimension '" + std::string(s) + "'");
}

std::vector<std::string> ExperienceBook::error_types() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : tips) {
    if (std::find(out.begin(), out.end(), key.second) == out.end()) out.push_back(key.second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace weave
