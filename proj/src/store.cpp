#include "weave/store.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "weave/digest.hpp"
#include "weave/errors.hpp"

namespace weave {

using json = nlohmann::json;

namespace {

constexpr std::string_view kPoolFormat = "weave.pool";
constexpr std::string_view kBookFormat = "weave.book";
constexpr std::string_view kRecordSchema = "weave.feedback";

template <class T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("field '") + name + "' has the wrong type");
  }
}

const json& object_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + name + "'");
  return *it;
}

json open_envelope(std::string_view bytes, std::string_view format) {
  auto doc = json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw CorruptFile("file is not a JSON document");
  auto fmt = doc.find("format");
  auto ver = doc.find("version");
  if (fmt == doc.end() || !fmt->is_string() || *fmt != format)
    throw VersionMismatch("expected format '" + std::string(format) + "'");
  if (ver == doc.end() || !ver->is_number_integer() || ver->get<int>() != kStoreFormatVersion)
    throw VersionMismatch("unsupported " + std::string(format) + " version " +
                          (ver == doc.end() ? std::string("<none>") : ver->dump()));
  auto sum = doc.find("checksum");
  auto payload = doc.find("payload");
  if (sum == doc.end() || payload == doc.end() || !sum->is_string())
    throw CorruptFile("missing checksum or payload");
  if (sha256_hex(payload->dump()) != sum->get<std::string>())
    throw CorruptFile("checksum mismatch");
  return *payload;
}

}  // namespace

json to_json(const FeedbackRecord& r) {
  json ann = json::array();
  for (const auto& a : r.error_annotations)
    ann.push_back({{"error_type", a.error_type}, {"description", a.description}});
  return {{"record_id", r.record_id},       {"source_text", r.source_text},
          {"revised_text", r.revised_text}, {"metric", to_string(r.metric)},
          {"score", r.score},               {"comment", r.comment},
          {"error_annotations", ann}};
}

FeedbackRecord record_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("record is not an object");
  FeedbackRecord r;
  r.record_id = field<std::string>(j, "record_id");
  if (r.record_id.empty()) throw SchemaError("empty record_id");
  r.source_text = field<std::string>(j, "source_text");
  r.revised_text = j.value("revised_text", std::string{});
  r.metric = parse_dimension(field<std::string>(j, "metric"));
  r.score = field<int>(j, "score");
  if (r.score < 1 || r.score > 5)
    throw SchemaError("score " + std::to_string(r.score) + " outside [1,5]");
  r.comment = j.value("comment", std::string{});
  if (auto it = j.find("error_annotations"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("error_annotations must be an array");
    for (const auto& a : *it) {
      ErrorAnnotation ea;
      ea.error_type = field<std::string>(a, "error_type");
      if (ea.error_type.empty()) throw SchemaError("empty error_type");
      ea.description = a.value("description", std::string{});
      r.error_annotations.push_back(std::move(ea));
    }
  }
  return r;
}

json to_json(const ExperienceUnit& u) {
  return {{"unit_id", u.unit_id}, {"metric", to_string(u.metric)}, {"text", u.text},
          {"level", u.level},     {"provenance", u.provenance},   {"children", u.children}};
}

ExperienceUnit unit_from_json(const json& j) {
  ExperienceUnit u;
  u.unit_id = field<std::string>(j, "unit_id");
  u.metric = parse_dimension(field<std::string>(j, "metric"));
  u.text = field<std::string>(j, "text");
  u.level = field<int>(j, "level");
  u.provenance = field<std::set<std::string>>(j, "provenance");
  u.children = field<std::vector<std::string>>(j, "children");
  if (u.level < 0) throw SchemaError("negative unit level");
  if (u.provenance.empty()) throw SchemaError("unit " + u.unit_id + " has empty provenance");
  if ((u.level == 0) != u.children.empty())
    throw SchemaError("unit " + u.unit_id + ": children must be empty iff level is 0");
  return u;
}

json to_json(const ExperienceBook& b) {
  json tips = json::object();
  for (const auto& [key, list] : b.tips) {
    json arr = json::array();
    for (const auto& t : list) arr.push_back({{"text", t.text}, {"supporting_units", t.supporting_units}});
    tips[std::string(to_string(key.first))][key.second] = std::move(arr);
  }
  json strategies = json::object();
  for (const auto& [phase, list] : b.strategies) {
    json arr = json::array();
    for (const auto& s : list) arr.push_back(s.text);
    strategies[std::string(to_string(phase))] = std::move(arr);
  }
  json units = json::array();
  for (const auto& u : b.units) units.push_back(to_json(u));
  return {{"book_version", b.version},
          {"config",
           {{"group_size", b.config.group_size},
            {"min_error_freq", b.config.min_error_freq},
            {"tips_per_error", b.config.tips_per_error}}},
          {"error_frequencies", b.error_frequencies},
          {"record_count", b.record_count},
          {"strategies", strategies},
          {"tips", tips},
          {"units", units}};
}

ExperienceBook book_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("book payload is not an object");
  ExperienceBook b;
  b.version = field<int>(j, "book_version");
  if (b.version < 1) throw SchemaError("book_version must be >= 1");
  const auto& cfg = object_field(j, "config");
  b.config.group_size = field<std::size_t>(cfg, "group_size");
  b.config.min_error_freq = field<double>(cfg, "min_error_freq");
  b.config.tips_per_error = field<std::size_t>(cfg, "tips_per_error");
  b.error_frequencies = field<std::map<std::string, std::size_t>>(j, "error_frequencies");
  b.record_count = field<std::size_t>(j, "record_count");
  for (const auto& [phase_name, arr] : object_field(j, "strategies").items()) {
    const auto phase = parse_phase(phase_name);
    auto& list = b.strategies[phase];
    for (const auto& s : arr) {
      if (!s.is_string()) throw SchemaError("strategy must be a string");
      list.push_back({phase, s.get<std::string>()});
    }
  }
  for (const auto& [phase_name, by_error] : object_field(j, "tips").items()) {
    const auto phase = parse_phase(phase_name);
    for (const auto& [error_type, arr] : by_error.items()) {
      auto& list = b.tips[{phase, error_type}];
      for (const auto& t : arr) {
        Tip tip;
        tip.phase = phase;
        tip.error_type = error_type;
        tip.text = field<std::string>(t, "text");
        tip.supporting_units = field<std::set<std::string>>(t, "supporting_units");
        list.push_back(std::move(tip));
      }
    }
  }
  for (const auto& u : object_field(j, "units")) b.units.push_back(unit_from_json(u));
  return b;
}

std::string seal(std::string_view format, const json& payload) {
  json doc = {{"checksum", sha256_hex(payload.dump())},
              {"format", format},
              {"payload", payload},
              {"version", kStoreFormatVersion}};
  return doc.dump(2) + "\n";
}

void check_provenance(const std::vector<ExperienceUnit>& pool) {
  std::unordered_map<std::string, const ExperienceUnit*> by_id;
  for (const auto& u : pool) by_id[u.unit_id] = &u;
  for (const auto& u : pool) {
    if (u.level == 0) continue;
    std::set<std::string> expected;
    int max_child = -1;
    for (const auto& c : u.children) {
      auto it = by_id.find(c);
      // Children of persisted top-level units are not kept; nothing to compare.
      if (it == by_id.end()) {
        max_child = -2;
        break;
      }
      expected.insert(it->second->provenance.begin(), it->second->provenance.end());
      max_child = std::max(max_child, it->second->level);
    }
    if (max_child == -2) continue;
    if (expected != u.provenance)
      throw IntegrityError("unit " + u.unit_id + ": provenance is not the union of its children");
    if (u.level != max_child + 1)
      throw IntegrityError("unit " + u.unit_id + ": level is not 1 + max child level");
  }
}

void check_book(const ExperienceBook& book) {
  std::set<std::string> ids;
  for (const auto& u : book.units) ids.insert(u.unit_id);
  for (const auto& [key, list] : book.tips) {
    if (list.empty())
      throw IntegrityError("no tips stored for (" + std::string(to_string(key.first)) + ", " +
                           key.second + ")");
    for (const auto& t : list) {
      if (t.text.empty()) throw IntegrityError("empty tip text for " + key.second);
      for (const auto& s : t.supporting_units)
        if (!ids.contains(s))
          throw IntegrityError("tip for " + key.second + " cites unknown unit '" + s + "'");
    }
  }
  for (const auto& [_, list] : book.strategies)
    for (const auto& s : list)
      if (s.text.empty()) throw IntegrityError("empty strategy text");
  check_provenance(book.units);
}

std::string serialize_pool(const std::vector<ExperienceUnit>& pool) {
  json units = json::array();
  for (const auto& u : pool) units.push_back(to_json(u));
  return seal(kPoolFormat, {{"units", units}});
}

std::string serialize_book(const ExperienceBook& book) { return seal(kBookFormat, to_json(book)); }

std::vector<ExperienceUnit> deserialize_pool(std::string_view bytes) {
  const auto payload = open_envelope(bytes, kPoolFormat);
  std::vector<ExperienceUnit> pool;
  for (const auto& u : object_field(payload, "units")) pool.push_back(unit_from_json(u));
  check_provenance(pool);
  return pool;
}

ExperienceBook deserialize_book(std::string_view bytes) {
  auto book = book_from_json(open_envelope(bytes, kBookFormat));
  check_book(book);
  return book;
}

void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_pool(const std::vector<ExperienceUnit>& pool, const std::filesystem::path& path) {
  write_atomic(path, serialize_pool(pool));
}

std::vector<ExperienceUnit> load_pool(const std::filesystem::path& path) {
  return deserialize_pool(read_file(path));
}

void save_book(const ExperienceBook& book, const std::filesystem::path& path) {
  write_atomic(path, serialize_book(book));
}

ExperienceBook load_book(const std::filesystem::path& path) {
  return deserialize_book(read_file(path));
}

void save_records(const std::vector<FeedbackRecord>& records, const std::filesystem::path& path) {
  std::string out = json{{"schema", kRecordSchema}, {"version", kRecordSchemaVersion}}.dump() + "\n";
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  write_atomic(path, out);
}

std::vector<FeedbackRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<FeedbackRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError("invalid JSON", lineno);
    if (j.is_object() && j.contains("schema")) {
      if (lineno != 1 && !out.empty()) throw SchemaError("schema header must come first", lineno);
      if (j["schema"] != kRecordSchema || j.value("version", 0) != kRecordSchemaVersion)
        throw SchemaError("unrecognized schema header " + j.dump(), lineno);
      continue;
    }
    FeedbackRecord r;
    try {
      r = record_from_json(j);
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), lineno);
    }
    if (!seen.insert(r.record_id).second)
      throw SchemaError("duplicate record_id '" + r.record_id + "'", lineno);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace weave
