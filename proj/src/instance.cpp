#include "bloomqa/instance.hpp"

#include <set>
#include <stdexcept>

#include "bloomqa/text.hpp"

namespace bloomqa {

void QAInstance::validate() const {
  if (options.size() < 2) {
    throw std::invalid_argument("instance " + id + ": needs at least 2 options");
  }
  if (gold_index >= options.size()) {
    throw std::invalid_argument("instance " + id + ": gold index " + std::to_string(gold_index) +
                                " out of range for " + std::to_string(options.size()) + " options");
  }
  std::set<std::string> distinct(options.begin(), options.end());
  if (distinct.size() != options.size()) {
    throw std::invalid_argument("instance " + id + ": options are not pairwise distinct");
  }
}

std::string QAInstance::context() const { return text::join_nonempty({prompt, question}); }

bool QAInstance::has_blank() const { return prompt.find('_') != std::string::npos; }

std::string QAInstance::fill_blank(std::size_t option) const {
  return text::replace_all(prompt, "_", options.at(option));
}

}  // namespace bloomqa
