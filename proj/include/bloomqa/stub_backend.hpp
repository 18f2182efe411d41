#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bloomqa/lm_backend.hpp"
#include "json.hpp"

namespace bloomqa {

// Explicit responses for the stub backend. Tests use it as the oracle
// surface: they decide exactly what the "model" says and how it scores.
//
// File format (JSON, comments allowed):
//   {
//     "generate": [ {"prompt_suffix": "...", "prompt_contains": ["..."],
//                    "completions": ["...", ...]} ],
//     "generate_fallback": "hash" | "empty",
//     "score": {"exact candidate text": -1.5},
//     "score_rules": [ {"contains": ["...", "..."], "value": -0.5} ],
//     "score_fallback": "hash" | <number>
//   }
// The first generate rule whose conditions all hold answers the request;
// sample i gets completions[i % size]. Scores come from the exact map, then
// the first score rule whose substrings all occur, then the fallback.
// Table scores are per-token values: total = normalized = value, one token.
struct StubTable {
  struct GenerateRule {
    std::optional<std::string> prompt_suffix;
    std::vector<std::string> prompt_contains;
    std::vector<std::string> completions;
  };
  struct ScoreRule {
    std::vector<std::string> contains;
    double value = 0.0;
  };

  std::vector<GenerateRule> generate;
  bool generate_fallback_hash = true;
  std::map<std::string, double> score;
  std::vector<ScoreRule> score_rules;
  std::optional<double> score_fallback;  // unset: hash

  // Throws ConfigError.
  static StubTable from_json(const nlohmann::json& j);
  static StubTable load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Deterministic offline backend. Without a table every response is a pure
// function of (text, request seed, sample index, stub seed): completions
// draw words from a fixed vocabulary and scores land in [-10, 0).
class StubBackend final : public Backend {
 public:
  explicit StubBackend(std::uint64_t seed = 0, std::optional<StubTable> table = std::nullopt);

  std::string id() const override { return id_; }

  static std::vector<std::string> hash_completions(std::string_view prompt, const GenParams& params,
                                                   std::uint64_t stub_seed);
  static ScoreValue hash_score(std::string_view text, std::uint64_t stub_seed);

 protected:
  std::vector<std::string> do_generate(std::string_view prompt, const GenParams& params) override;
  ScoreValue do_score(std::string_view text) override;

 private:
  std::uint64_t seed_;
  std::optional<StubTable> table_;
  std::string id_;
};

}  // namespace bloomqa
