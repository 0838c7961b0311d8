#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "weave/types.hpp"

namespace weave {

/// Format version written into pool and book headers.
inline constexpr int kStoreFormatVersion = 1;
/// Schema version accepted in record-set headers.
inline constexpr int kRecordSchemaVersion = 1;

nlohmann::json to_json(const FeedbackRecord& r);
nlohmann::json to_json(const ExperienceUnit& u);
nlohmann::json to_json(const ExperienceBook& b);
/// Throws SchemaError on missing or ill-typed fields.
FeedbackRecord record_from_json(const nlohmann::json& j);
ExperienceUnit unit_from_json(const nlohmann::json& j);
ExperienceBook book_from_json(const nlohmann::json& j);

/// Canonical bytes for a pool or book file. Same value, same bytes.
std::string serialize_pool(const std::vector<ExperienceUnit>& pool);
std::string serialize_book(const ExperienceBook& book);
std::vector<ExperienceUnit> deserialize_pool(std::string_view bytes);
ExperienceBook deserialize_book(std::string_view bytes);

/// Atomic save (temp file + rename) and checked load. Loads raise
/// CorruptFile, VersionMismatch, SchemaError or IntegrityError.
void save_pool(const std::vector<ExperienceUnit>& pool, const std::filesystem::path& path);
std::vector<ExperienceUnit> load_pool(const std::filesystem::path& path);
void save_book(const ExperienceBook& book, const std::filesystem::path& path);
ExperienceBook load_book(const std::filesystem::path& path);

/// Seals a payload into a checksummed, versioned envelope. Exposed so tools
/// and tests can re-seal hand-edited payloads.
std::string seal(std::string_view format, const nlohmann::json& payload);

/// Combined units must carry exactly the union of their children's provenance
/// and sit one level above their highest child. Throws IntegrityError.
void check_provenance(const std::vector<ExperienceUnit>& pool);
/// Book invariants: non-empty tips and strategies, supporting units present.
void check_book(const ExperienceBook& book);

/// Line-delimited JSON record sets; an optional first line
/// {"schema":"weave.feedback","version":1} declares the schema.
void save_records(const std::vector<FeedbackRecord>& records, const std::filesystem::path& path);
std::vector<FeedbackRecord> load_records(const std::filesystem::path& path);

/// Writes `bytes` to `path` through a sibling temp file and rename.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace weave
