#include <algorithm>
#include <vector>

#include "bloomqa/errors.hpp"
#include "bloomqa/instance.hpp"
#include "bloomqa/taxonomy.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace bloomqa;

namespace {

std::vector<int> levels_of(DatasetKind kind) {
  std::vector<int> out;
  for (const auto& t : prefixes_for(kind)) out.push_back(t.level.value());
  return out;
}

const PrefixTemplate& by_prefix(DatasetKind kind, std::string_view prefix) {
  for (const auto& t : prefixes_for(kind)) {
    if (t.question_prefix == prefix) return t;
  }
  FAIL("missing prefix " << prefix);
  throw;
}

}  // namespace

TEST_CASE("taxonomy levels outside 1..3 are rejected") {
  CHECK_THROWS_AS(TaxonomyLevel(0), std::invalid_argument);
  CHECK_THROWS_AS(TaxonomyLevel(4), std::invalid_argument);
  CHECK(TaxonomyLevel::remember().name() == "Remember");
  CHECK(TaxonomyLevel::understand().name() == "Understand");
  CHECK(TaxonomyLevel::apply().name() == "Apply");
  CHECK(TaxonomyLevel(1) < TaxonomyLevel(2));
}

TEST_CASE("winogrande registry: six templates in table order") {
  CHECK(levels_of(DatasetKind::winogrande) == std::vector<int>{1, 2, 2, 1, 1, 2});
  auto t = prefixes_for(DatasetKind::winogrande);
  CHECK(t[0].question_prefix == "What is the definition of");
  CHECK(t[1].question_prefix == "What is the main purpose of");
  CHECK(t[2].question_prefix == "What is the main function of a");
  CHECK(t[3].question_prefix == "What are the properties of a");
  CHECK(t[4].question_prefix == "What is");
  CHECK(t[5].question_prefix == "What does it mean to");
}

TEST_CASE("copa and commonsenseqa share seven templates") {
  std::vector<int> expected{1, 2, 2, 1, 1, 3, 3};
  CHECK(levels_of(DatasetKind::copa) == expected);
  CHECK(levels_of(DatasetKind::commonsense_qa) == expected);
  auto t = prefixes_for(DatasetKind::copa);
  CHECK(t[5].question_prefix == "What happened as a result of");
  CHECK(t[6].question_prefix == "What might have caused");
  for (const auto& tmpl : t) CHECK(tmpl.dataset == DatasetKind::copa);
}

TEST_CASE("socialiqa registry: nineteen templates with the table's levels") {
  CHECK(levels_of(DatasetKind::social_iqa) ==
        std::vector<int>{3, 3, 3, 3, 3, 2, 2, 2, 3, 3, 3, 2, 2, 2, 2, 3, 3, 3, 1});
  CHECK(by_prefix(DatasetKind::social_iqa, "What did [NAME] do?").level.value() == 1);
  CHECK(by_prefix(DatasetKind::social_iqa, "How would you describe [NAME]?").level.value() == 2);
  CHECK(by_prefix(DatasetKind::social_iqa, "What will [NAME] want to do next?").level.value() == 3);
  CHECK(by_prefix(DatasetKind::social_iqa, "What will [NAME] want to do next?").answer_prefix == "[NAME] wanted");
}

TEST_CASE("every dataset has a template at its proximal level") {
  for (auto kind : kAllDatasets) {
    INFO(to_string(kind));
    CHECK_FALSE(prefixes_for(kind).empty());
    CHECK(PrefixRegistry::bundled().has_level(kind, proximal_level(kind)));
    CHECK(proximal_level(kind).value() + 1 == dataset_level(kind).value());
  }
}

TEST_CASE("proximal levels") {
  CHECK(proximal_level(DatasetKind::winogrande).value() == 1);
  CHECK(proximal_level(DatasetKind::social_iqa).value() == 2);
  CHECK(proximal_level(DatasetKind::copa).value() == 2);
  CHECK(proximal_level(DatasetKind::commonsense_qa).value() == 2);
  CHECK_THROWS_AS(proximal_level(TaxonomyLevel::remember()), UndefinedProximalContext);
}

TEST_CASE("template ids are unique and resolvable") {
  const auto& reg = PrefixRegistry::bundled();
  for (auto kind : kAllDatasets) {
    std::vector<std::string> ids;
    for (const auto& t : reg.prefixes_for(kind)) {
      ids.push_back(t.id);
      REQUIRE(reg.find(t.id) != nullptr);
      CHECK(reg.find(t.id)->question_prefix == t.question_prefix);
    }
    std::sort(ids.begin(), ids.end());
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
  }
  CHECK(prefix_slug("What is the main purpose of") == "what-is-the-main-purpose-of");
}

TEST_CASE("substitute_placeholders binds [NAME] from the context") {
  auto inst = testing::make_instance("k", DatasetKind::social_iqa,
                                     "Kendall got a new sports car and could not wait to show friends.",
                                     "What will Kendall want to do next?", {"a", "b", "c"}, 0);
  const auto& tmpl = by_prefix(DatasetKind::social_iqa, "What will [NAME] want to do next?");
  auto sub = substitute_placeholders(tmpl, inst);
  CHECK(sub.question == "What will Kendall want to do next?");
  CHECK(sub.answer == "Kendall wanted");
  CHECK(sub.question.find("[NAME]") == std::string::npos);
}

TEST_CASE("substitute_placeholders leaves placeholder-free templates unchanged") {
  auto inst = testing::make_instance("c", DatasetKind::copa, "The tire went flat.", "What was the cause of this?",
                                     {"x", "y"}, 0);
  const auto& tmpl = prefixes_for(DatasetKind::copa)[0];
  auto sub = substitute_placeholders(tmpl, inst);
  CHECK(sub.question == tmpl.question_prefix);
  CHECK(sub.answer == "The definition of _ is");
}

TEST_CASE("substitute_placeholders without a name throws NameNotFound") {
  auto inst = testing::make_instance("n", DatasetKind::social_iqa, "the dog barked all night.", "why did it bark?",
                                     {"a", "b", "c"}, 0);
  const auto& tmpl = by_prefix(DatasetKind::social_iqa, "What did [NAME] do?");
  CHECK_THROWS_AS(substitute_placeholders(tmpl, inst), NameNotFound);
}

TEST_CASE("registry parse rejects bad documents") {
  CHECK_THROWS_AS(PrefixRegistry::parse("not json"), ConfigError);
  CHECK_THROWS_AS(PrefixRegistry::parse(R"({"version":1,"templates":[{"datasets":["copa"],)"
                                        R"("question_prefix":"What is","answer_prefix":"_ is","level":4}]})"),
                  ConfigError);
  auto reg = PrefixRegistry::parse(R"({
    // comments allowed
    "version": 1,
    "templates": [{"datasets": ["winogrande"], "question_prefix": "What is", "answer_prefix": "_ is", "level": 1}]
  })");
  CHECK(reg.prefixes_for(DatasetKind::winogrande).size() == 1);
  CHECK(reg.prefixes_for(DatasetKind::copa).empty());
}

TEST_CASE("dataset kind names") {
  CHECK(parse_dataset_kind("SocialIQA") == DatasetKind::social_iqa);
  CHECK(parse_dataset_kind("csqa") == DatasetKind::commonsense_qa);
  CHECK(parse_dataset_kind("winogrande") == DatasetKind::winogrande);
  CHECK_THROWS_AS(parse_dataset_kind("hellaswag"), std::invalid_argument);
  CHECK(report_letter(DatasetKind::winogrande) == 'A');
  CHECK(report_letter(DatasetKind::social_iqa) == 'B');
  CHECK(report_letter(DatasetKind::copa) == 'C');
  CHECK(report_letter(DatasetKind::commonsense_qa) == 'D');
}
