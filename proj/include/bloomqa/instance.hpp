#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bloomqa/taxonomy.hpp"

namespace bloomqa {

// One multiple-choice benchmark item.
struct QAInstance {
  std::string id;
  DatasetKind dataset = DatasetKind::copa;
  std::string prompt;
  std::string question;
  std::vector<std::string> options;
  std::size_t gold_index = 0;

  // K >= 2, gold_index < K, options pairwise distinct. Throws
  // std::invalid_argument naming the broken invariant.
  void validate() const;

  // Prompt and question joined; what the model sees before any
  // clarification.
  std::string context() const;

  // Winogrande prompts carry a `_` blank that options fill in.
  bool has_blank() const;
  std::string fill_blank(std::size_t option) const;
};

}  // namespace bloomqa
