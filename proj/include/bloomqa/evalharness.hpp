#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bloomqa/http_backend.hpp"
#include "bloomqa/instance.hpp"
#include "bloomqa/lm_backend.hpp"
#include "bloomqa/selection.hpp"
#include "bloomqa/selftalk.hpp"
#include "bloomqa/taxonomy.hpp"
#include "json.hpp"

namespace bloomqa {

enum class BackendKind { stub, http };

struct BackendConfig {
  BackendKind kind = BackendKind::stub;
  std::uint64_t stub_seed = 0;
  std::optional<std::filesystem::path> stub_table;
  // api_key is only ever filled from the environment.
  HttpBackendConfig http;
};

struct RunConfig {
  DatasetKind dataset = DatasetKind::winogrande;
  std::filesystem::path data_path;
  std::vector<Restriction> restrictions;
  std::vector<std::int64_t> seeds{1, 2, 3};
  BackendConfig backend;
  SelfTalkParams selftalk = SelfTalkParams::defaults();
  ScoreMode score_mode = ScoreMode::normalized;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::size_t> max_instances;
  std::optional<std::filesystem::path> prefix_registry;
  std::optional<std::filesystem::path> report_out;
  bool skip_bad_lines = false;
  // Instances processed concurrently.
  int jobs = 4;

  // Checks every invariant without touching the network. Throws ConfigError.
  void validate(const PrefixRegistry& registry) const;
  // Checks that every referenced file exists. Throws ConfigError.
  void check_inputs() const;

  // Config-file representation. The API key is never included.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// The choice baseline followed by every level the registry has prefixes for.
std::vector<Restriction> default_restrictions(DatasetKind dataset, const PrefixRegistry& registry);

PrefixRegistry load_registry(const RunConfig& config);

// Builds the configured backend, attaches `log` to it, and wraps it in a
// response cache when cache_dir is set.
std::shared_ptr<Backend> make_backend(const RunConfig& config, std::shared_ptr<RequestLog> log = nullptr);

// Instances whose clarification set has at least one clarification at every
// requested level (and at least one overall). Order is preserved.
std::vector<QAInstance> filter_valid(std::span<const QAInstance> instances,
                                     const std::map<std::string, ClarificationSet>& sets,
                                     std::span<const Restriction> restrictions);

struct SeedRow {
  Restriction restriction = Restriction::choice_baseline();
  std::int64_t seed = 0;
  std::size_t correct = 0;
  std::size_t valid_count = 0;
  // Undefined when no instance was valid.
  std::optional<double> accuracy;
};

struct SeedSummary {
  std::int64_t seed = 0;
  std::size_t valid_count = 0;
  std::size_t name_not_found_skips = 0;
};

struct AggregateRow {
  Restriction restriction = Restriction::choice_baseline();
  std::string label;
  bool proximal = false;
  std::optional<double> mean_accuracy;
  double std_accuracy = 0.0;
  double mean_valid = 0.0;
  double std_valid = 0.0;
  std::size_t defined_seeds = 0;
};

struct EvalReport {
  DatasetKind dataset = DatasetKind::winogrande;
  std::size_t total_instances = 0;
  std::size_t evaluated_instances = 0;
  nlohmann::json config;
  std::vector<SeedSummary> seeds;
  std::vector<SeedRow> seed_rows;
  std::vector<AggregateRow> aggregate;

  const AggregateRow& row(const Restriction& r) const;

  nlohmann::json to_json() const;
  std::string to_json_text() const;
  // Aligned text table in the layout of the published accuracy tables.
  std::string to_table() const;
};

// Mean and sample standard deviation; std is 0 for fewer than two values.
std::pair<double, double> mean_std(std::span<const double> values);

std::vector<AggregateRow> aggregate_rows(DatasetKind dataset, std::span<const Restriction> restrictions,
                                         std::span<const SeedRow> rows);

// Runs `fn(i)` for i in [0, count) on up to `jobs` threads. The first
// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

// Clarification sets for every instance under one seed, keyed by id.
std::map<std::string, ClarificationSet> generate_all(std::span<const QAInstance> instances,
                                                     std::span<const PrefixTemplate> registry, std::int64_t seed,
                                                     Backend& backend, const SelfTalkParams& params, int jobs);

// The full protocol on already-loaded data.
EvalReport evaluate(const RunConfig& config, std::span<const QAInstance> instances, const PrefixRegistry& registry,
                    Backend& backend, std::size_t total_instances);

// Loads data and registry, builds the backend and runs the protocol. Empty
// restrictions mean default_restrictions.
// Throws EvalAborted when the backend becomes unavailable.
EvalReport evaluate(const RunConfig& config, std::shared_ptr<RequestLog> log = nullptr);

std::vector<QAInstance> load_instances(const RunConfig& config, std::size_t* total = nullptr);

}  // namespace bloomqa
