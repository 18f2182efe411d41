#include "bloomqa/selection.hpp"

#include <stdexcept>

#include "bloomqa/errors.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

Restriction Restriction::parse(std::string_view s) {
  auto key = text::to_lower(text::trim(s));
  if (key == "choice" || key == "baseline" || key == "0" || key == "any") return choice_baseline();
  if (key.size() == 1 && key[0] >= '1' && key[0] <= '9') return level(TaxonomyLevel(key[0] - '0'));
  throw std::invalid_argument("restriction must be 'choice' or a taxonomy level 1..3, got '" + std::string(s) + "'");
}

std::string Restriction::key() const { return level_ ? std::to_string(level_->value()) : "choice"; }

std::string Restriction::label(DatasetKind dataset) const {
  std::string out = level_ ? std::to_string(level_->value()) : "0";
  out += report_letter(dataset);
  out += ": ";
  out += level_ ? std::string(level_->name()) : "Choice Baseline";
  return out;
}

ScoreMatrix::ScoreMatrix(std::string instance_id, std::vector<Clarification> clarifications,
                         std::size_t option_count, std::vector<ScoreValue> entries, ScoreMode mode)
    : instance_id_(std::move(instance_id)),
      clarifications_(std::move(clarifications)),
      option_count_(option_count),
      entries_(std::move(entries)),
      mode_(mode) {
  if (entries_.size() != clarifications_.size() * option_count_) {
    throw std::invalid_argument("score matrix must hold one entry per (clarification, option)");
  }
}

const ScoreValue& ScoreMatrix::entry(std::size_t j, std::size_t o) const {
  if (j >= rows() || o >= option_count_) throw std::out_of_range("score matrix index out of range");
  return entries_[j * option_count_ + o];
}

std::string assemble_candidate(const QAInstance& instance, const Clarification& clarification,
                               std::size_t option_index) {
  if (option_index >= instance.options.size()) throw std::out_of_range("option index out of range");
  if (instance.dataset == DatasetKind::winogrande && instance.has_blank()) {
    return text::join_nonempty({instance.fill_blank(option_index), instance.question, clarification.answer_text});
  }
  return text::join_nonempty(
      {instance.prompt, instance.question, clarification.answer_text, instance.options[option_index]});
}

ScoreMatrix score_all(const QAInstance& instance, const ClarificationSet& set, Backend& backend, ScoreMode mode) {
  auto rows = set.flattened();
  if (rows.empty()) throw EmptyClarificationSet("instance " + instance.id + " has no clarifications");
  auto k = instance.options.size();
  std::vector<ScoreValue> entries;
  entries.reserve(rows.size() * k);
  for (const auto& c : rows) {
    for (std::size_t o = 0; o < k; ++o) entries.push_back(backend.score(assemble_candidate(instance, c, o)));
  }
  return ScoreMatrix(instance.id, std::move(rows), k, std::move(entries), mode);
}

SelectionResult select(const ScoreMatrix& matrix, const Restriction& restriction) {
  std::optional<SelectionResult> best;
  for (std::size_t j = 0; j < matrix.rows(); ++j) {
    if (!restriction.admits(matrix.level_of(j))) continue;
    for (std::size_t o = 0; o < matrix.options(); ++o) {
      double v = matrix.value(j, o);
      if (!best || v > best->best_score) best = SelectionResult{o, j, v, restriction};
    }
  }
  if (!best) {
    if (restriction.is_choice_baseline()) {
      throw EmptyClarificationSet("score matrix for " + matrix.instance_id() + " is empty");
    }
    throw NoClarificationAtLevel("instance " + matrix.instance_id() + " has no clarification at level " +
                                 restriction.key());
  }
  return *best;
}

SelectionResult select_answer(const ScoreMatrix& matrix, TaxonomyLevel level) {
  return select(matrix, Restriction::level(level));
}

SelectionResult choice_baseline(const ScoreMatrix& matrix) { return select(matrix, Restriction::choice_baseline()); }

}  // namespace bloomqa
