#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bloomqa {

struct QAInstance;

// A Bloom's Taxonomy level. Only the three lowest levels have prefixes, so
// construction outside 1..3 throws std::invalid_argument.
class TaxonomyLevel {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 3;

  explicit TaxonomyLevel(int value);

  static TaxonomyLevel remember() { return TaxonomyLevel(1); }
  static TaxonomyLevel understand() { return TaxonomyLevel(2); }
  static TaxonomyLevel apply() { return TaxonomyLevel(3); }

  int value() const noexcept { return value_; }
  std::string_view name() const noexcept;

  auto operator<=>(const TaxonomyLevel&) const = default;

 private:
  int value_;
};

enum class DatasetKind { copa, commonsense_qa, social_iqa, winogrande };

inline constexpr DatasetKind kAllDatasets[] = {DatasetKind::copa, DatasetKind::commonsense_qa,
                                               DatasetKind::social_iqa, DatasetKind::winogrande};

// Machine name: "copa", "commonsense_qa", "social_iqa", "winogrande".
std::string_view to_string(DatasetKind kind) noexcept;
// Human name as used in reports, e.g. "SocialIQA".
std::string_view display_name(DatasetKind kind) noexcept;
// Accepts the machine name, the display name, or common spellings
// ("socialiqa", "csqa", ...), case-insensitively. Throws std::invalid_argument.
DatasetKind parse_dataset_kind(std::string_view name);

// Level of the questions each benchmark asks.
TaxonomyLevel dataset_level(DatasetKind kind) noexcept;

// Row-group letter used in report labels ("1A", "2B", ...).
char report_letter(DatasetKind kind) noexcept;

// Proximal context sits one level below the question level. Level-1
// questions have no proximal context: throws UndefinedProximalContext.
TaxonomyLevel proximal_level(TaxonomyLevel question_level);
TaxonomyLevel proximal_level(DatasetKind kind);

struct PrefixTemplate {
  std::string id;
  std::string question_prefix;
  std::string answer_prefix;
  TaxonomyLevel level;
  DatasetKind dataset;

  bool uses_name() const;
  // Prefixes that are already full questions ("What did [NAME] do?") are
  // not completed by the model.
  bool is_complete_question() const;
};

// Per-dataset prefix templates, in registry order.
class PrefixRegistry {
 public:
  // The registry compiled into the library from data/prefix_registry.json.
  static const PrefixRegistry& bundled();

  // Parses the registry format (JSON, comments allowed). Throws ConfigError.
  static PrefixRegistry parse(std::string_view document);
  static PrefixRegistry load(const std::filesystem::path& path);

  std::span<const PrefixTemplate> prefixes_for(DatasetKind kind) const;
  const PrefixTemplate* find(std::string_view id) const;
  bool has_level(DatasetKind kind, TaxonomyLevel level) const;

 private:
  std::map<DatasetKind, std::vector<PrefixTemplate>> by_dataset_;
};

std::span<const PrefixTemplate> prefixes_for(DatasetKind kind);

// "What is the main purpose of" -> "what-is-the-main-purpose-of".
std::string prefix_slug(std::string_view question_prefix);

struct SubstitutedPrefix {
  std::string question;
  std::string answer;
};

// Fills [NAME] from the instance context. `_` is left for the answer stage.
// Throws NameNotFound when [NAME] is present and no name can be extracted.
SubstitutedPrefix substitute_placeholders(const PrefixTemplate& tmpl, const QAInstance& instance);

}  // namespace bloomqa
