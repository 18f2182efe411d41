#include "bloomqa/errors.hpp"
#include "bloomqa/lm_backend.hpp"
#include "bloomqa/stub_backend.hpp"
#include "bloomqa/text.hpp"
#include "doctest.h"

using namespace bloomqa;
using nlohmann::json;

TEST_CASE("stub generation is deterministic and within budget") {
  StubBackend a(0), b(0);
  auto params = GenParams::words(6, 0.2, 5, 7);
  auto x = a.generate("What is the definition of", params);
  auto y = b.generate("What is the definition of", params);
  REQUIRE(x.size() == 5);
  CHECK(x == y);
  for (const auto& c : x) CHECK(text::word_count(c) <= 6);

  auto other_seed = a.generate("What is the definition of", GenParams::words(6, 0.2, 5, 8));
  CHECK(other_seed != x);
  StubBackend c(99);
  CHECK(c.generate("What is the definition of", params) != x);
}

TEST_CASE("zero budget gives empty completions without a request") {
  auto log = std::make_shared<RequestLog>();
  StubBackend stub(0);
  stub.attach_log(log);
  auto out = stub.generate("prompt", GenParams::words(0, 0.2, 1));
  CHECK(out == std::vector<std::string>{""});
  CHECK(log->size() == 0);
}

TEST_CASE("stop character and word budget truncation") {
  auto p = GenParams::words(6, 0.2, 1);
  p.stop_at = '?';
  CHECK(truncate_completion(" a flat tire? and more", p) == " a flat tire?");
  CHECK(truncate_completion(" one two three four five six seven eight", p) == " one two three four five six");
  auto t = GenParams::tokens(10, 0.5, 1);
  CHECK(truncate_completion(" unchanged text", t) == " unchanged text");
}

TEST_CASE("stub scores are negative, repeatable and stateless") {
  StubBackend stub(7);
  auto s1 = stub.score("abc");
  CHECK(s1.total_logprob < 0.0);
  CHECK(s1.total_logprob >= -10.0);
  stub.score("something else entirely");
  auto s2 = stub.score("abc");
  CHECK(s1 == s2);
  CHECK(StubBackend(7).score("abc") == s1);
  CHECK(s1.normalized == doctest::Approx(s1.total_logprob / s1.token_count));
}

TEST_CASE("empty text scores zero over one token") {
  StubBackend stub(0);
  auto v = stub.score("   ");
  CHECK(v.total_logprob == 0.0);
  CHECK(v.token_count == 1);
  CHECK(v.normalized == 0.0);
}

TEST_CASE("invalid params are rejected") {
  StubBackend stub(0);
  CHECK_THROWS_AS(stub.generate("p", GenParams::words(6, 0.0, 1)), std::invalid_argument);
  CHECK_THROWS_AS(stub.generate("p", GenParams::words(6, 1.5, 1)), std::invalid_argument);
  CHECK_THROWS_AS(stub.generate("p", GenParams::words(6, 0.5, 0)), std::invalid_argument);
  CHECK_THROWS_AS(stub.generate("p", GenParams::words(-1, 0.5, 1)), std::invalid_argument);
  CHECK_THROWS_AS(stub.generate("  ", GenParams::words(6, 0.5, 1)), std::invalid_argument);
}

TEST_CASE("gen params json round trip") {
  auto p = GenParams::words(6, 0.2, 5, 3);
  p.stop_at = '?';
  CHECK(GenParams::from_json(p.to_json()) == p);
  auto t = GenParams::tokens(10, 0.5, 10, 4);
  CHECK(GenParams::from_json(t.to_json()) == t);
  CHECK(t.to_json()["top_p"] == 0.5);
  CHECK(t.to_json()["max_new_tokens"] == 10);
}

TEST_CASE("score value json round trip") {
  auto v = ScoreValue::from_total(-6.0, 3, ScoreSource::echo_trimmed);
  CHECK(v.normalized == -2.0);
  CHECK(ScoreValue::from_json(v.to_json()) == v);
  CHECK(score_field(v, ScoreMode::sum) == -6.0);
  CHECK(score_field(v, ScoreMode::normalized) == -2.0);
}

TEST_CASE("stub table mode") {
  auto table = StubTable::from_json(json::parse(R"({
    "generate": [
      {"prompt_suffix": "What is the definition of", "completions": [" a flat tire?"]},
      {"prompt_contains": ["long"], "completions": ["one two three four five six seven eight nine ten eleven twelve"]}
    ],
    "generate_fallback": "empty",
    "score": {"exact text": -1.5},
    "score_rules": [{"contains": ["tire", "air"], "value": -0.25}],
    "score_fallback": -9
  })"));
  StubBackend stub(0, table);
  CHECK(stub.generate("My tire. What is the definition of", GenParams::words(6, 0.2, 3)) ==
        std::vector<std::string>(3, " a flat tire?"));
  CHECK(stub.generate("unmatched prompt", GenParams::words(6, 0.2, 2)) == std::vector<std::string>(2, ""));
  auto long_answer = stub.generate("a long prompt", GenParams::tokens(10, 0.5, 1));
  CHECK(text::word_count(long_answer[0]) == 10);
  CHECK(stub.score("exact text").total_logprob == -1.5);
  CHECK(stub.score("the tire holds air").total_logprob == -0.25);
  CHECK(stub.score("anything").total_logprob == -9.0);
  CHECK(stub.id() != StubBackend(0).id());

  CHECK_THROWS_AS(StubTable::from_json(json::parse(R"({"score": {"x": 1.0}})")), ConfigError);
}

TEST_CASE("request log records every real request") {
  auto log = std::make_shared<RequestLog>();
  StubBackend stub(0);
  stub.attach_log(log);
  stub.generate("prompt one", GenParams::words(6, 0.2, 5, 1));
  stub.score("candidate");
  stub.score("");
  auto records = log->snapshot();
  REQUIRE(records.size() == 2);
  CHECK(records[0].kind == RequestKind::generate);
  CHECK(records[0].params->nucleus_p == 0.2);
  CHECK(records[0].params->num_samples == 5);
  CHECK(records[1].kind == RequestKind::score);
  CHECK_FALSE(records[1].params.has_value());
  CHECK(records[0].sequence < records[1].sequence);
  CHECK(records[0].response_digest.size() == 64);
  CHECK(log->canonical_text().find("timestamp") == std::string::npos);
}
