#include "bloomqa/selftalk.hpp"

#include <set>

#include "bloomqa/errors.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

using nlohmann::json;

bool ClarificationSet::add(Clarification c) {
  auto& list = by_level[c.level];
  auto key = text::normalize_key(c.answer_text);
  for (const auto& existing : list) {
    if (text::normalize_key(existing.answer_text) == key) return false;
  }
  list.push_back(std::move(c));
  return true;
}

bool ClarificationSet::has_level(TaxonomyLevel level) const {
  auto it = by_level.find(level);
  return it != by_level.end() && !it->second.empty();
}

std::size_t ClarificationSet::size() const {
  std::size_t n = 0;
  for (const auto& [level, list] : by_level) n += list.size();
  return n;
}

std::vector<Clarification> ClarificationSet::flattened() const {
  std::vector<Clarification> out;
  for (const auto& [level, list] : by_level) out.insert(out.end(), list.begin(), list.end());
  return out;
}

json ClarificationSet::to_json() const {
  json list = json::array();
  for (const auto& c : flattened()) {
    list.push_back({{"prefix_id", c.question.prefix_id},
                    {"question", c.question.full_question},
                    {"completion_span", c.question.completion_span},
                    {"answer", c.answer_text},
                    {"level", c.level.value()}});
  }
  return {{"instance_id", instance_id},
          {"seed", seed},
          {"skipped_templates", skipped_templates},
          {"clarifications", list}};
}

ClarificationSet ClarificationSet::from_json(const json& j) {
  ClarificationSet set;
  set.instance_id = j.at("instance_id").get<std::string>();
  set.seed = j.at("seed").get<std::int64_t>();
  set.skipped_templates = j.value("skipped_templates", std::vector<std::string>{});
  for (const auto& c : j.at("clarifications")) {
    TaxonomyLevel level(c.at("level").get<int>());
    ClarificationQuestion q{c.at("prefix_id").get<std::string>(), c.at("question").get<std::string>(),
                            c.value("completion_span", std::string()), level};
    set.add({std::move(q), c.at("answer").get<std::string>(), level});
  }
  return set;
}

std::string_view to_string(OverlapFilter f) noexcept {
  switch (f) {
    case OverlapFilter::off: return "off";
    case OverlapFilter::require: return "require";
    case OverlapFilter::forbid: return "forbid";
  }
  return "off";
}

OverlapFilter parse_overlap_filter(std::string_view s) {
  if (s == "off") return OverlapFilter::off;
  if (s == "require") return OverlapFilter::require;
  if (s == "forbid") return OverlapFilter::forbid;
  throw std::invalid_argument("overlap filter must be off, require or forbid");
}

SelfTalkParams SelfTalkParams::defaults() {
  SelfTalkParams p;
  p.question_params = GenParams::words(6, 0.2, 5);
  p.question_params.stop_at = '?';
  p.answer_params = GenParams::tokens(10, 0.5, 10);
  return p;
}

namespace {

// The span with its terminal "?" removed; used to fill `_` in answer
// prefixes and for word counting.
std::string span_core(std::string_view span) {
  auto s = text::trim(span);
  if (!s.empty() && s.back() == '?') s.pop_back();
  return text::trim(s);
}

}  // namespace

std::vector<ClarificationQuestion> ask_clarification_questions(Backend& backend, const QAInstance& instance,
                                                               const PrefixTemplate& tmpl, std::int64_t seed,
                                                               const GenParams& params) {
  auto sub = substitute_placeholders(tmpl, instance);
  if (tmpl.is_complete_question()) {
    return {ClarificationQuestion{tmpl.id, text::trim(sub.question), "", tmpl.level}};
  }

  auto request = params;
  request.seed = seed;
  auto prompt = text::join_nonempty({instance.context(), sub.question});
  auto completions = backend.generate(prompt, request);

  std::vector<ClarificationQuestion> out;
  std::set<std::string> seen;
  for (const auto& completion : completions) {
    auto mark = completion.find('?');
    if (mark == std::string::npos) continue;
    auto span = text::trim(std::string_view(completion).substr(0, mark + 1));
    auto core = span_core(span);
    if (core.empty()) continue;
    if (params.max_new_words && text::word_count(core) > static_cast<std::size_t>(*params.max_new_words)) continue;
    // Keep the "?" attached to the last word.
    span = core + "?";
    ClarificationQuestion q{tmpl.id, text::join_nonempty({sub.question, span}), span, tmpl.level};
    if (!seen.insert(text::normalize_key(q.full_question)).second) continue;
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Clarification> answer_clarification(Backend& backend, const ClarificationQuestion& question,
                                                const PrefixTemplate& tmpl, const QAInstance& instance,
                                                std::int64_t seed, const GenParams& params) {
  auto sub = substitute_placeholders(tmpl, instance);
  auto answer_prefix = text::join_nonempty({text::replace_all(sub.answer, "_", span_core(question.completion_span))});

  auto request = params;
  request.seed = seed;
  auto prompt = text::join_nonempty({instance.context(), question.full_question, answer_prefix});
  auto continuations = backend.generate(prompt, request);

  std::vector<Clarification> out;
  std::set<std::string> seen;
  for (const auto& cont : continuations) {
    if (text::trim(cont).empty()) continue;
    auto answer = text::join_nonempty({answer_prefix, cont});
    if (!seen.insert(text::normalize_key(answer)).second) continue;
    out.push_back({question, std::move(answer), question.level});
  }
  return out;
}

bool shares_words_with_context(const Clarification& c, const QAInstance& instance) {
  static const std::set<std::string> kFunctionWords = {
      "a", "an", "the", "of", "to", "in", "on", "at", "is", "was", "are", "were", "be", "and", "or",
      "it", "this", "that", "as", "for", "with", "by", "he", "she", "they", "his", "her", "their", "i"};
  auto ctx_words = text::content_words(instance.context());
  std::set<std::string> ctx(ctx_words.begin(), ctx_words.end());
  for (const auto& w : text::content_words(c.answer_text)) {
    if (!kFunctionWords.count(w) && ctx.count(w)) return true;
  }
  return false;
}

ClarificationSet generate_clarifications(Backend& backend, const QAInstance& instance,
                                         std::span<const PrefixTemplate> registry, std::int64_t seed,
                                         const SelfTalkParams& params) {
  if (registry.empty()) throw std::invalid_argument("generate_clarifications: empty prefix registry");
  ClarificationSet set;
  set.instance_id = instance.id;
  set.seed = seed;
  for (const auto& tmpl : registry) {
    std::vector<ClarificationQuestion> questions;
    try {
      questions = ask_clarification_questions(backend, instance, tmpl, seed, params.question_params);
    } catch (const NameNotFound&) {
      set.skipped_templates.push_back(tmpl.id);
      continue;
    }
    for (const auto& q : questions) {
      for (auto& c : answer_clarification(backend, q, tmpl, instance, seed, params.answer_params)) {
        if (params.overlap != OverlapFilter::off) {
          bool overlaps = shares_words_with_context(c, instance);
          if ((params.overlap == OverlapFilter::require) != overlaps) continue;
        }
        set.add(std::move(c));
      }
    }
  }
  return set;
}

}  // namespace bloomqa
