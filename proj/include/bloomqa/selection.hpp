#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bloomqa/instance.hpp"
#include "bloomqa/lm_backend.hpp"
#include "bloomqa/selftalk.hpp"
#include "bloomqa/taxonomy.hpp"

namespace bloomqa {

// Which clarifications selection may draw from: one taxonomy level, or all
// of them (the choice baseline).
class Restriction {
 public:
  static Restriction choice_baseline() { return Restriction(); }
  static Restriction level(TaxonomyLevel l) { return Restriction(l); }
  // "choice" / "0" / "baseline", or a level number. Throws std::invalid_argument.
  static Restriction parse(std::string_view s);

  bool is_choice_baseline() const noexcept { return !level_; }
  const std::optional<TaxonomyLevel>& taxonomy_level() const noexcept { return level_; }
  bool admits(TaxonomyLevel l) const noexcept { return !level_ || *level_ == l; }

  // "choice" or the level number; stable key for reports.
  std::string key() const;
  // Report row label, e.g. "0A: Choice Baseline" or "2B: Understand".
  std::string label(DatasetKind dataset) const;

  auto operator<=>(const Restriction&) const = default;

 private:
  Restriction() = default;
  explicit Restriction(TaxonomyLevel l) : level_(l) {}
  std::optional<TaxonomyLevel> level_;
};

// Scores for every (clarification j, option o) candidate of one instance.
// Rows follow ClarificationSet::flattened(): level ascending, then
// generation order.
class ScoreMatrix {
 public:
  ScoreMatrix(std::string instance_id, std::vector<Clarification> clarifications, std::size_t option_count,
              std::vector<ScoreValue> entries, ScoreMode mode);

  const std::string& instance_id() const noexcept { return instance_id_; }
  std::size_t rows() const noexcept { return clarifications_.size(); }
  std::size_t options() const noexcept { return option_count_; }
  ScoreMode mode() const noexcept { return mode_; }

  const Clarification& clarification(std::size_t j) const { return clarifications_.at(j); }
  TaxonomyLevel level_of(std::size_t j) const { return clarifications_.at(j).level; }
  const ScoreValue& entry(std::size_t j, std::size_t o) const;
  // The configured score field of entry(j, o).
  double value(std::size_t j, std::size_t o) const { return score_field(entry(j, o), mode_); }

 private:
  std::string instance_id_;
  std::vector<Clarification> clarifications_;
  std::size_t option_count_;
  std::vector<ScoreValue> entries_;
  ScoreMode mode_;
};

struct SelectionResult {
  std::size_t chosen_option = 0;
  std::size_t chosen_clarification = 0;
  double best_score = 0.0;
  Restriction restriction = Restriction::choice_baseline();
};

// Candidate text: prompt, question, clarification answer and option joined
// by single spaces. Winogrande prompts have their blank filled with the
// option instead of the option being appended.
std::string assemble_candidate(const QAInstance& instance, const Clarification& clarification,
                               std::size_t option_index);

// Throws EmptyClarificationSet for an empty set; backend errors propagate
// and no partial matrix is returned.
ScoreMatrix score_all(const QAInstance& instance, const ClarificationSet& set, Backend& backend,
                      ScoreMode mode = ScoreMode::normalized);

// argmax over options of the max over admitted clarifications; ties go to
// the lowest j, then the lowest o.
SelectionResult select_answer(const ScoreMatrix& matrix, TaxonomyLevel level);
SelectionResult choice_baseline(const ScoreMatrix& matrix);
SelectionResult select(const ScoreMatrix& matrix, const Restriction& restriction);

}  // namespace bloomqa
