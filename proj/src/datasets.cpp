#include "bloomqa/datasets.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "bloomqa/errors.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

namespace {

using nlohmann::json;

const json& require(const RawRecord& rec, const json& obj, std::string_view field) {
  auto it = obj.find(std::string(field));
  if (it == obj.end() || it->is_null()) {
    throw SchemaError(rec.line_number, std::string(field), "missing field '" + std::string(field) + "'");
  }
  return *it;
}

std::string require_string(const RawRecord& rec, const json& obj, std::string_view field) {
  const auto& v = require(rec, obj, field);
  if (!v.is_string()) {
    throw SchemaError(rec.line_number, std::string(field), "field '" + std::string(field) + "' is not a string");
  }
  return v.get<std::string>();
}

// Labels show up as ints in some distributions and strings in others.
long require_int(const RawRecord& rec, const json& obj, std::string_view field) {
  const auto& v = require(rec, obj, field);
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_string()) {
    auto s = text::trim(v.get<std::string>());
    try {
      std::size_t used = 0;
      long out = std::stol(s, &used);
      if (used == s.size()) return out;
    } catch (const std::exception&) {
    }
  }
  throw SchemaError(rec.line_number, std::string(field), "field '" + std::string(field) + "' is not an integer");
}

std::string optional_id(const json& obj, std::string_view field) {
  auto it = obj.find(std::string(field));
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long>());
  return {};
}

std::size_t checked_gold(const RawRecord& rec, long gold, std::size_t k, std::string_view field) {
  if (gold < 0 || static_cast<std::size_t>(gold) >= k) {
    throw SchemaError(rec.line_number, std::string(field),
                      "label out of range for " + std::to_string(k) + " options");
  }
  return static_cast<std::size_t>(gold);
}

QAInstance map_copa(const RawRecord& rec) {
  const auto& p = rec.payload;
  QAInstance inst;
  inst.id = optional_id(p, "idx");
  inst.prompt = require_string(rec, p, "premise");
  auto flag = text::to_lower(text::trim(require_string(rec, p, "question")));
  if (flag == "cause") {
    inst.question = std::string(kCopaCauseQuestion);
  } else if (flag == "effect") {
    inst.question = std::string(kCopaEffectQuestion);
  } else {
    throw SchemaError(rec.line_number, "question", "COPA question must be 'cause' or 'effect'");
  }
  inst.options = {require_string(rec, p, "choice1"), require_string(rec, p, "choice2")};
  inst.gold_index = checked_gold(rec, require_int(rec, p, "label"), 2, "label");
  return inst;
}

QAInstance map_social_iqa(const RawRecord& rec) {
  const auto& p = rec.payload;
  QAInstance inst;
  inst.id = optional_id(p, "id");
  inst.prompt = require_string(rec, p, "context");
  inst.question = require_string(rec, p, "question");
  inst.options = {require_string(rec, p, "answerA"), require_string(rec, p, "answerB"),
                  require_string(rec, p, "answerC")};
  inst.gold_index = checked_gold(rec, require_int(rec, p, "label") - 1, 3, "label");
  return inst;
}

QAInstance map_commonsense_qa(const RawRecord& rec) {
  const auto& p = rec.payload;
  QAInstance inst;
  inst.id = optional_id(p, "id");
  const auto& q = require(rec, p, "question");
  if (!q.is_object()) throw SchemaError(rec.line_number, "question", "field 'question' is not an object");
  inst.prompt = require_string(rec, q, "stem");
  const auto& choices = require(rec, q, "choices");
  if (!choices.is_array() || choices.empty()) {
    throw SchemaError(rec.line_number, "choices", "field 'choices' is not a non-empty array");
  }
  auto key = text::trim(require_string(rec, p, "answerKey"));
  long gold = -1;
  for (const auto& c : choices) {
    if (!c.is_object()) throw SchemaError(rec.line_number, "choices", "choice is not an object");
    if (text::trim(require_string(rec, c, "label")) == key) gold = static_cast<long>(inst.options.size());
    inst.options.push_back(require_string(rec, c, "text"));
  }
  if (gold < 0) throw SchemaError(rec.line_number, "answerKey", "answerKey '" + key + "' matches no choice");
  inst.gold_index = checked_gold(rec, gold, inst.options.size(), "answerKey");
  return inst;
}

QAInstance map_winogrande(const RawRecord& rec) {
  const auto& p = rec.payload;
  QAInstance inst;
  inst.id = optional_id(p, "qID");
  inst.prompt = require_string(rec, p, "sentence");
  if (inst.prompt.find('_') == std::string::npos) {
    throw SchemaError(rec.line_number, "sentence", "Winogrande sentence has no '_' blank");
  }
  inst.options = {require_string(rec, p, "option1"), require_string(rec, p, "option2")};
  inst.gold_index = checked_gold(rec, require_int(rec, p, "answer") - 1, 2, "answer");
  return inst;
}

}  // namespace

QAInstance to_instance(const RawRecord& record) {
  if (!record.payload.is_object()) {
    throw SchemaError(record.line_number, "", "record is not a JSON object");
  }
  QAInstance inst;
  switch (record.dataset) {
    case DatasetKind::copa: inst = map_copa(record); break;
    case DatasetKind::social_iqa: inst = map_social_iqa(record); break;
    case DatasetKind::commonsense_qa: inst = map_commonsense_qa(record); break;
    case DatasetKind::winogrande: inst = map_winogrande(record); break;
  }
  inst.dataset = record.dataset;
  if (inst.id.empty()) inst.id = std::string(to_string(record.dataset)) + ":" + std::to_string(record.line_number);
  try {
    inst.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(record.line_number, "options", e.what());
  }
  return inst;
}

std::vector<QAInstance> parse_dataset(std::string_view contents, DatasetKind kind, const LoadOptions& options,
                                      LoadStats* stats) {
  std::vector<QAInstance> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  LoadStats local;
  auto& st = stats ? *stats : local;
  while (pos < contents.size()) {
    auto eol = contents.find('\n', pos);
    auto line = contents.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? contents.size() : eol + 1;
    ++line_no;
    if (text::trim(line).empty()) continue;
    ++st.lines_read;
    try {
      RawRecord rec{kind, line_no, {}};
      try {
        rec.payload = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(line_no, e.what());
      }
      auto inst = to_instance(rec);
      if (!ids.insert(inst.id).second) {
        throw SchemaError(line_no, "id", "duplicate instance id '" + inst.id + "'");
      }
      out.push_back(std::move(inst));
    } catch (const Error& e) {
      if (!options.skip_bad_lines) throw;
      ++st.skipped_lines;
      st.skip_reasons.emplace_back(e.what());
    }
  }
  return out;
}

std::vector<QAInstance> load_dataset(const std::filesystem::path& path, DatasetKind kind, const LoadOptions& options,
                                     LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), kind, options, stats);
}

std::string extract_name(std::string_view context) {
  // Capitalized words that start sentences or name times, not people.
  static const std::set<std::string> kNotNames = {
      "A", "An", "The", "This", "That", "These", "Those", "There", "Then", "Their", "They", "Them",
      "He", "She", "It", "We", "You", "I", "Me", "My", "Our", "Your", "His", "Her", "Its", "Who",
      "What", "When", "Where", "Why", "How", "Which", "After", "Before", "During", "While", "Since",
      "Because", "If", "But", "And", "Or", "So", "As", "At", "In", "On", "Of", "For", "From", "To",
      "With", "Without", "By", "About", "Over", "Under", "Yesterday", "Today", "Tomorrow", "Tonight",
      "One", "Every", "Each", "Some", "Many", "All", "Most", "No", "Not", "Once", "Later", "Last",
      "Next", "Finally", "Also", "Still", "Even", "Just", "Monday", "Tuesday", "Wednesday",
      "Thursday", "Friday", "Saturday", "Sunday", "January", "February", "March", "April", "May",
      "June", "July", "August", "September", "October", "November", "December"};

  for (const auto& raw : text::split_words(context)) {
    std::string word;
    for (char c : raw) {
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '\'' || c == '-') word += c;
    }
    while (!word.empty() && (word.front() == '\'' || word.front() == '-')) word.erase(word.begin());
    if (word.size() >= 2 && word.compare(word.size() - 2, 2, "'s") == 0) word.resize(word.size() - 2);
    while (!word.empty() && (word.back() == '\'' || word.back() == '-')) word.pop_back();
    if (word.empty() || !std::isupper(static_cast<unsigned char>(word.front()))) continue;
    if (kNotNames.count(word)) continue;
    return word;
  }
  throw NameNotFound("no name found in context: " + std::string(context.substr(0, 80)));
}

}  // namespace bloomqa
