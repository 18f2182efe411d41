#include "bloomqa/stub_backend.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "bloomqa/digest.hpp"
#include "bloomqa/errors.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

using nlohmann::json;

namespace {

// Roughly one word in ten closes a question, so short question budgets
// produce a realistic mix of well-formed and ill-formed completions.
constexpr std::array<std::string_view, 40> kVocabulary = {
    "the",    "a",      "small",  "old",    "red",    "house",  "car",    "dog",
    "friend", "water",  "tire",   "light",  "room",   "school", "work",   "money",
    "food",   "people", "family", "time",   "day",    "new",    "good",   "to",
    "of",     "in",     "and",    "was",    "is",     "help",   "make",   "them",
    "it?",    "this?",  "that?",  "him?",   "her?",   "them.",  "home.",  "there."};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool contains_all(std::string_view s, const std::vector<std::string>& needles) {
  for (const auto& n : needles) {
    if (s.find(n) == std::string_view::npos) return false;
  }
  return true;
}

double checked_table_score(double v, const std::string& where) {
  if (!(v <= 0.0)) throw ConfigError("stub table: " + where + " must be a non-positive log-probability");
  return v;
}

}  // namespace

StubTable StubTable::from_json(const json& j) {
  StubTable t;
  try {
    if (!j.is_object()) throw ConfigError("stub table: expected a JSON object");
    for (const auto& r : j.value("generate", json::array())) {
      GenerateRule rule;
      if (r.contains("prompt_suffix")) rule.prompt_suffix = r["prompt_suffix"].get<std::string>();
      rule.prompt_contains = r.value("prompt_contains", std::vector<std::string>{});
      rule.completions = r.at("completions").get<std::vector<std::string>>();
      if (rule.completions.empty()) throw ConfigError("stub table: generate rule with no completions");
      t.generate.push_back(std::move(rule));
    }
    auto gf = j.value("generate_fallback", std::string("hash"));
    if (gf != "hash" && gf != "empty") throw ConfigError("stub table: generate_fallback must be 'hash' or 'empty'");
    t.generate_fallback_hash = gf == "hash";
    auto score = j.value("score", json::object());
    for (const auto& [text, v] : score.items()) {
      t.score[text] = checked_table_score(v.get<double>(), "score entry");
    }
    for (const auto& r : j.value("score_rules", json::array())) {
      ScoreRule rule{r.at("contains").get<std::vector<std::string>>(),
                     checked_table_score(r.at("value").get<double>(), "score rule value")};
      t.score_rules.push_back(std::move(rule));
    }
    if (j.contains("score_fallback")) {
      const auto& f = j["score_fallback"];
      if (f.is_number()) {
        t.score_fallback = checked_table_score(f.get<double>(), "score_fallback");
      } else if (!(f.is_string() && f.get<std::string>() == "hash")) {
        throw ConfigError("stub table: score_fallback must be 'hash' or a number");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stub table: ") + e.what());
  }
  return t;
}

StubTable StubTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stub table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(json::parse(ss.str(), nullptr, true, true));
  } catch (const json::parse_error& e) {
    throw ConfigError("stub table " + path.string() + ": " + e.what());
  }
}

json StubTable::to_json() const {
  json j;
  j["generate"] = json::array();
  for (const auto& r : generate) {
    json rule;
    if (r.prompt_suffix) rule["prompt_suffix"] = *r.prompt_suffix;
    rule["prompt_contains"] = r.prompt_contains;
    rule["completions"] = r.completions;
    j["generate"].push_back(rule);
  }
  j["generate_fallback"] = generate_fallback_hash ? "hash" : "empty";
  j["score"] = score;
  j["score_rules"] = json::array();
  for (const auto& r : score_rules) j["score_rules"].push_back({{"contains", r.contains}, {"value", r.value}});
  j["score_fallback"] = score_fallback ? json(*score_fallback) : json("hash");
  return j;
}

StubBackend::StubBackend(std::uint64_t seed, std::optional<StubTable> table)
    : seed_(seed), table_(std::move(table)) {
  id_ = "stub:" + std::to_string(seed_);
  if (table_) id_ += ":table:" + sha256_hex(table_->to_json().dump()).substr(0, 16);
}

std::vector<std::string> StubBackend::hash_completions(std::string_view prompt, const GenParams& params,
                                                       std::uint64_t stub_seed) {
  std::vector<std::string> out;
  auto budget = static_cast<std::uint64_t>(params.budget());
  for (int i = 0; i < params.num_samples; ++i) {
    std::string key(prompt);
    key += '\x1f';
    key += std::to_string(params.seed);
    key += '\x1f';
    key += std::to_string(i);
    std::uint64_t state = stable_hash64(key, stub_seed);
    auto words = splitmix64(state) % (budget + 1);
    std::string completion;
    for (std::uint64_t w = 0; w < words; ++w) {
      completion += ' ';
      completion += kVocabulary[splitmix64(state) % kVocabulary.size()];
    }
    out.push_back(std::move(completion));
  }
  return out;
}

ScoreValue StubBackend::hash_score(std::string_view text, std::uint64_t stub_seed) {
  auto h = stable_hash64(text, stub_seed);
  double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  double total = -10.0 + 10.0 * unit;
  auto tokens = static_cast<int>(text::word_count(text));
  return ScoreValue::from_total(total, tokens, ScoreSource::stub);
}

std::vector<std::string> StubBackend::do_generate(std::string_view prompt, const GenParams& params) {
  if (table_) {
    auto trimmed = text::trim(prompt);
    for (const auto& rule : table_->generate) {
      if (rule.prompt_suffix && !ends_with(trimmed, text::trim(*rule.prompt_suffix))) continue;
      if (!contains_all(prompt, rule.prompt_contains)) continue;
      // The stub has no tokenizer: one word counts as one token.
      auto word_budget = params;
      if (params.max_new_tokens) {
        word_budget.max_new_words = params.max_new_tokens;
        word_budget.stop_at.reset();
      }
      std::vector<std::string> out;
      for (int i = 0; i < params.num_samples; ++i) {
        const auto& c = rule.completions[static_cast<std::size_t>(i) % rule.completions.size()];
        out.push_back(params.max_new_tokens ? truncate_completion(c, word_budget) : c);
      }
      return out;
    }
    if (!table_->generate_fallback_hash) return std::vector<std::string>(params.num_samples);
  }
  return hash_completions(prompt, params, seed_);
}

ScoreValue StubBackend::do_score(std::string_view text) {
  if (table_) {
    auto it = table_->score.find(std::string(text));
    if (it != table_->score.end()) return ScoreValue::from_total(it->second, 1, ScoreSource::stub);
    for (const auto& rule : table_->score_rules) {
      if (contains_all(text, rule.contains)) return ScoreValue::from_total(rule.value, 1, ScoreSource::stub);
    }
    if (table_->score_fallback) return ScoreValue::from_total(*table_->score_fallback, 1, ScoreSource::stub);
  }
  return hash_score(text, seed_);
}

}  // namespace bloomqa
