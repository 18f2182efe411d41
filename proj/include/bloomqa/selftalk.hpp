#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bloomqa/instance.hpp"
#include "bloomqa/lm_backend.hpp"
#include "bloomqa/taxonomy.hpp"
#include "json.hpp"

namespace bloomqa {

struct ClarificationQuestion {
  std::string prefix_id;
  // Substituted prefix plus the model's completion, ending in "?".
  std::string full_question;
  // Words the model added after the prefix, "?" included. Empty for
  // prefixes that are already complete questions.
  std::string completion_span;
  TaxonomyLevel level = TaxonomyLevel::remember();
};

struct Clarification {
  ClarificationQuestion question;
  // Instantiated answer prefix followed by the generated continuation.
  std::string answer_text;
  TaxonomyLevel level = TaxonomyLevel::remember();
};

// All clarifications generated for one instance under one seed, grouped by
// level. Within a level, entries keep generation order (registry order,
// then sample index) and duplicate answers are dropped.
struct ClarificationSet {
  std::string instance_id;
  std::int64_t seed = 0;
  std::map<TaxonomyLevel, std::vector<Clarification>> by_level;
  // Templates skipped because [NAME] could not be bound.
  std::vector<std::string> skipped_templates;

  // False when an equivalent answer already exists at that level.
  bool add(Clarification c);
  bool has_level(TaxonomyLevel level) const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  // Level ascending, then generation order: the row order of score matrices.
  std::vector<Clarification> flattened() const;

  nlohmann::json to_json() const;
  static ClarificationSet from_json(const nlohmann::json& j);
};

// Which clarifications survive a word-overlap check against the instance
// context. `off` keeps everything.
enum class OverlapFilter { off, require, forbid };

std::string_view to_string(OverlapFilter f) noexcept;
OverlapFilter parse_overlap_filter(std::string_view s);

struct SelfTalkParams {
  GenParams question_params;
  GenParams answer_params;
  OverlapFilter overlap = OverlapFilter::off;

  // Five questions per prefix at p=0.2 adding at most six words; ten
  // answers per question at p=0.5 and at most ten tokens.
  static SelfTalkParams defaults();
};

// Stage 1: complete the prefix into up to num_samples questions. Completions
// with no "?" within the word budget, or nothing before the "?", are
// dropped. Prefixes that are already questions are used as-is without a
// backend call.
std::vector<ClarificationQuestion> ask_clarification_questions(Backend& backend, const QAInstance& instance,
                                                               const PrefixTemplate& tmpl, std::int64_t seed,
                                                               const GenParams& params);

// Stage 2: answer one question. The prompt is the instance context, the
// question and the instantiated answer prefix, with `_` filled from the
// question's completion span.
std::vector<Clarification> answer_clarification(Backend& backend, const ClarificationQuestion& question,
                                                const PrefixTemplate& tmpl, const QAInstance& instance,
                                                std::int64_t seed, const GenParams& params);

// Stages 1 and 2 over every template.
ClarificationSet generate_clarifications(Backend& backend, const QAInstance& instance,
                                         std::span<const PrefixTemplate> registry, std::int64_t seed,
                                         const SelfTalkParams& params = SelfTalkParams::defaults());

bool shares_words_with_context(const Clarification& c, const QAInstance& instance);

}  // namespace bloomqa
