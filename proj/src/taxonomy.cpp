#include "bloomqa/taxonomy.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bloomqa/datasets.hpp"
#include "bloomqa/errors.hpp"
#include "bloomqa/instance.hpp"
#include "bloomqa/text.hpp"
#include "json.hpp"

namespace bloomqa {

namespace detail {
extern const std::string_view kBundledRegistryJson;
}

namespace {

constexpr std::string_view kNamePlaceholder = "[NAME]";

}  // namespace

TaxonomyLevel::TaxonomyLevel(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw std::invalid_argument("taxonomy level must be in 1..3, got " + std::to_string(value));
  }
}

std::string_view TaxonomyLevel::name() const noexcept {
  switch (value_) {
    case 1: return "Remember";
    case 2: return "Understand";
    default: return "Apply";
  }
}

std::string_view to_string(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::copa: return "copa";
    case DatasetKind::commonsense_qa: return "commonsense_qa";
    case DatasetKind::social_iqa: return "social_iqa";
    case DatasetKind::winogrande: return "winogrande";
  }
  return "unknown";
}

std::string_view display_name(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::copa: return "COPA";
    case DatasetKind::commonsense_qa: return "CommonsenseQA";
    case DatasetKind::social_iqa: return "SocialIQA";
    case DatasetKind::winogrande: return "Winogrande";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (key == "copa") return DatasetKind::copa;
  if (key == "commonsenseqa" || key == "csqa") return DatasetKind::commonsense_qa;
  if (key == "socialiqa" || key == "siqa") return DatasetKind::social_iqa;
  if (key == "winogrande" || key == "wg") return DatasetKind::winogrande;
  throw std::invalid_argument("unknown dataset '" + std::string(name) +
                              "' (expected copa, commonsense_qa, social_iqa or winogrande)");
}

TaxonomyLevel dataset_level(DatasetKind kind) noexcept {
  return kind == DatasetKind::winogrande ? TaxonomyLevel::understand() : TaxonomyLevel::apply();
}

char report_letter(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::winogrande: return 'A';
    case DatasetKind::social_iqa: return 'B';
    case DatasetKind::copa: return 'C';
    case DatasetKind::commonsense_qa: return 'D';
  }
  return '?';
}

TaxonomyLevel proximal_level(TaxonomyLevel question_level) {
  if (question_level.value() <= TaxonomyLevel::kMin) {
    throw UndefinedProximalContext("proximal context is undefined for level-1 questions");
  }
  return TaxonomyLevel(question_level.value() - 1);
}

TaxonomyLevel proximal_level(DatasetKind kind) { return proximal_level(dataset_level(kind)); }

bool PrefixTemplate::uses_name() const {
  return question_prefix.find(kNamePlaceholder) != std::string::npos ||
         answer_prefix.find(kNamePlaceholder) != std::string::npos;
}

bool PrefixTemplate::is_complete_question() const {
  auto q = text::trim(question_prefix);
  return !q.empty() && q.back() == '?';
}

std::string prefix_slug(std::string_view question_prefix) {
  std::string slug;
  bool dash = false;
  for (char c : question_prefix) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (dash && !slug.empty()) slug += '-';
      dash = false;
      slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      dash = true;
    }
  }
  return slug;
}

PrefixRegistry PrefixRegistry::parse(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("prefix registry: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_array()) {
    throw ConfigError("prefix registry: expected an object with a 'templates' array");
  }

  PrefixRegistry reg;
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& rec : doc["templates"]) {
    ++index;
    auto where = "prefix registry record " + std::to_string(index);
    try {
      auto question = text::trim(rec.at("question_prefix").get<std::string>());
      auto answer = text::trim(rec.at("answer_prefix").get<std::string>());
      auto level = TaxonomyLevel(rec.at("level").get<int>());
      if (question.empty()) throw ConfigError(where + ": question_prefix is empty");
      if (question.find(kNamePlaceholder) != std::string::npos &&
          answer.find(kNamePlaceholder) == std::string::npos) {
        throw ConfigError(where + ": question_prefix uses [NAME] but answer_prefix does not");
      }
      std::vector<std::string> datasets;
      if (rec.contains("datasets")) {
        datasets = rec["datasets"].get<std::vector<std::string>>();
      } else {
        datasets.push_back(rec.at("dataset").get<std::string>());
      }
      if (datasets.empty()) throw ConfigError(where + ": no dataset given");
      for (const auto& ds : datasets) {
        auto kind = parse_dataset_kind(ds);
        PrefixTemplate t{std::string(to_string(kind)) + "/" + prefix_slug(question), question, answer,
                         level, kind};
        if (!seen.insert(t.id).second) throw ConfigError(where + ": duplicate template id " + t.id);
        reg.by_dataset_[kind].push_back(std::move(t));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return reg;
}

PrefixRegistry PrefixRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open prefix registry " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const PrefixRegistry& PrefixRegistry::bundled() {
  static const PrefixRegistry reg = parse(detail::kBundledRegistryJson);
  return reg;
}

std::span<const PrefixTemplate> PrefixRegistry::prefixes_for(DatasetKind kind) const {
  auto it = by_dataset_.find(kind);
  if (it == by_dataset_.end()) return {};
  return it->second;
}

const PrefixTemplate* PrefixRegistry::find(std::string_view id) const {
  for (const auto& [kind, list] : by_dataset_) {
    for (const auto& t : list) {
      if (t.id == id) return &t;
    }
  }
  return nullptr;
}

bool PrefixRegistry::has_level(DatasetKind kind, TaxonomyLevel level) const {
  for (const auto& t : prefixes_for(kind)) {
    if (t.level == level) return true;
  }
  return false;
}

std::span<const PrefixTemplate> prefixes_for(DatasetKind kind) {
  return PrefixRegistry::bundled().prefixes_for(kind);
}

SubstitutedPrefix substitute_placeholders(const PrefixTemplate& tmpl, const QAInstance& instance) {
  if (!tmpl.uses_name()) return {tmpl.question_prefix, tmpl.answer_prefix};
  auto source = instance.prompt.empty() ? instance.context() : instance.prompt;
  auto name = extract_name(source);
  return {text::replace_all(tmpl.question_prefix, kNamePlaceholder, name),
          text::replace_all(tmpl.answer_prefix, kNamePlaceholder, name)};
}

}  // namespace bloomqa
