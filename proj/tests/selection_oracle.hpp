#pragma once

#include <limits>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "bloomqa/selection.hpp"

namespace bloomqa::testing {

struct OracleChoice {
  std::size_t option = 0;
  std::size_t clarification = 0;
  double score = 0.0;
};

// Exhaustive enumeration: collect every admitted (j, o) entry, take the
// maximum value, and among the entries reaching it pick the smallest
// (j, o) pair.
inline std::optional<OracleChoice> oracle_select(const ScoreMatrix& m, std::optional<int> level) {
  std::vector<OracleChoice> admitted;
  for (std::size_t j = 0; j < m.rows(); ++j) {
    if (level && m.level_of(j).value() != *level) continue;
    for (std::size_t o = 0; o < m.options(); ++o) admitted.push_back({o, j, m.value(j, o)});
  }
  if (admitted.empty()) return std::nullopt;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : admitted) best = std::max(best, a.score);
  std::optional<OracleChoice> pick;
  for (const auto& a : admitted) {
    if (a.score != best) continue;
    if (!pick || a.clarification < pick->clarification ||
        (a.clarification == pick->clarification && a.option < pick->option)) {
      pick = a;
    }
  }
  return pick;
}

// Random matrix with at most 3 levels, 10 clarifications and 5 options.
// Every other matrix draws from a coarse grid so ties are common.
inline ScoreMatrix random_matrix(std::mt19937_64& rng, std::size_t index, double shift = 0.0) {
  std::uniform_int_distribution<int> rows_d(1, 10), opts_d(2, 5), level_d(1, 3), grid_d(-4, 0);
  std::uniform_real_distribution<double> real_d(-10.0, 0.0);
  auto rows = static_cast<std::size_t>(rows_d(rng));
  auto opts = static_cast<std::size_t>(opts_d(rng));
  std::vector<int> levels;
  for (std::size_t j = 0; j < rows; ++j) levels.push_back(level_d(rng));
  std::sort(levels.begin(), levels.end());
  std::vector<Clarification> cs;
  for (std::size_t j = 0; j < rows; ++j) {
    TaxonomyLevel l(levels[j]);
    cs.push_back({ClarificationQuestion{"p", "q?", "", l}, "answer " + std::to_string(j), l});
  }
  std::vector<ScoreValue> entries;
  for (std::size_t k = 0; k < rows * opts; ++k) {
    double v = index % 2 ? static_cast<double>(grid_d(rng)) : real_d(rng);
    entries.push_back(ScoreValue::from_total(v + shift, 1, ScoreSource::stub));
  }
  return ScoreMatrix("m" + std::to_string(index), std::move(cs), opts, std::move(entries), ScoreMode::normalized);
}

inline std::set<int> populated_levels(const ScoreMatrix& m) {
  std::set<int> out;
  for (std::size_t j = 0; j < m.rows(); ++j) out.insert(m.level_of(j).value());
  return out;
}

inline ScoreMatrix shifted(const ScoreMatrix& m, double c) {
  std::vector<Clarification> cs;
  std::vector<ScoreValue> entries;
  for (std::size_t j = 0; j < m.rows(); ++j) {
    cs.push_back(m.clarification(j));
    for (std::size_t o = 0; o < m.options(); ++o) {
      entries.push_back(ScoreValue::from_total(m.value(j, o) + c, 1, ScoreSource::stub));
    }
  }
  return ScoreMatrix(m.instance_id(), std::move(cs), m.options(), std::move(entries), m.mode());
}

}  // namespace bloomqa::testing
