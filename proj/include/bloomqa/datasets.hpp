#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bloomqa/instance.hpp"
#include "bloomqa/taxonomy.hpp"
#include "json.hpp"

namespace bloomqa {

// One input line, parsed but not yet mapped onto a QAInstance.
struct RawRecord {
  DatasetKind dataset;
  std::size_t line_number;
  nlohmann::json payload;
};

struct LoadOptions {
  // Tolerate malformed lines instead of failing on the first one.
  bool skip_bad_lines = false;
};

struct LoadStats {
  std::size_t lines_read = 0;
  std::size_t skipped_lines = 0;
  std::vector<std::string> skip_reasons;
};

// COPA framing text, keyed by the record's "cause"/"effect" flag.
inline constexpr std::string_view kCopaCauseQuestion = "What was the cause of this?";
inline constexpr std::string_view kCopaEffectQuestion = "What happened as a result?";

// Maps one parsed record to a QAInstance. Throws SchemaError.
QAInstance to_instance(const RawRecord& record);

// Reads a JSON-lines dev file. Throws ParseError for unparseable lines and
// SchemaError for missing or invalid fields, unless skip_bad_lines is set.
std::vector<QAInstance> load_dataset(const std::filesystem::path& path, DatasetKind kind,
                                     const LoadOptions& options = {}, LoadStats* stats = nullptr);

std::vector<QAInstance> parse_dataset(std::string_view contents, DatasetKind kind,
                                      const LoadOptions& options = {}, LoadStats* stats = nullptr);

// Picks the person a SocialIQA-style context is about: the first
// capitalized word that is not a common sentence opener, pronoun, weekday
// or month. Punctuation and a trailing possessive are stripped.
// Throws NameNotFound when there is no such word.
std::string extract_name(std::string_view context);

}  // namespace bloomqa
