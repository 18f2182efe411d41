#include "bloomqa/evalharness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "bloomqa/cache.hpp"
#include "bloomqa/datasets.hpp"
#include "bloomqa/errors.hpp"
#include "bloomqa/stub_backend.hpp"

namespace bloomqa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json params_json(const GenParams& p) {
  auto j = p.to_json();
  // The per-run seed replaces whatever is configured here.
  j.erase("seed");
  return j;
}

GenParams params_from(const json& j) {
  try {
    return GenParams::from_json(j);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid generation parameters: ") + e.what());
  }
}

std::optional<fs::path> optional_path(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  auto s = j[key].get<std::string>();
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

std::vector<Restriction> parse_levels(const json& j) {
  std::vector<std::string> items;
  if (j.is_string()) {
    std::string cur;
    for (char c : j.get<std::string>() + ",") {
      if (c == ',') {
        if (!cur.empty()) items.push_back(cur);
        cur.clear();
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        cur += c;
      }
    }
  } else if (j.is_array()) {
    for (const auto& e : j) items.push_back(e.is_string() ? e.get<std::string>() : std::to_string(e.get<int>()));
  } else if (!j.is_null()) {
    throw ConfigError("levels must be a list or a comma-separated string");
  }
  std::vector<Restriction> out;
  for (const auto& i : items) {
    try {
      out.push_back(Restriction::parse(i));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

}  // namespace

void RunConfig::validate(const PrefixRegistry& registry) const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  std::set<std::int64_t> distinct_seeds(seeds.begin(), seeds.end());
  if (distinct_seeds.size() != seeds.size()) throw ConfigError("seeds must be pairwise distinct");
  if (restrictions.empty()) throw ConfigError("at least one level restriction is required");
  std::set<Restriction> distinct_levels(restrictions.begin(), restrictions.end());
  if (distinct_levels.size() != restrictions.size()) throw ConfigError("levels must not repeat");
  if (registry.prefixes_for(dataset).empty()) {
    throw ConfigError("prefix registry has no templates for " + std::string(display_name(dataset)));
  }
  for (const auto& r : restrictions) {
    if (r.taxonomy_level() && !registry.has_level(dataset, *r.taxonomy_level())) {
      throw ConfigError("no " + std::string(display_name(dataset)) + " prefixes at level " + r.key());
    }
  }
  try {
    selftalk.question_params.validate();
    selftalk.answer_params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid generation parameters: ") + e.what());
  }
  if (!selftalk.question_params.max_new_words) {
    throw ConfigError("question generation needs a word budget (max_new_words)");
  }
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (max_instances && *max_instances == 0) throw ConfigError("max_instances must be positive");
  if (backend.kind == BackendKind::http) {
    parse_endpoint(backend.http.endpoint);
    if (backend.http.model.empty()) throw ConfigError("http backend needs a model id (--model)");
    if (backend.http.max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  }
}

void RunConfig::check_inputs() const {
  if (data_path.empty()) throw ConfigError("no dataset file given (--data-path)");
  if (!fs::exists(data_path)) throw ConfigError("dataset file not found: " + data_path.string());
  if (prefix_registry && !fs::exists(*prefix_registry)) {
    throw ConfigError("prefix registry not found: " + prefix_registry->string());
  }
  if (backend.kind == BackendKind::stub && backend.stub_table && !fs::exists(*backend.stub_table)) {
    throw ConfigError("stub table not found: " + backend.stub_table->string());
  }
}

json RunConfig::to_json() const {
  json j;
  j["dataset"] = to_string(dataset);
  j["data_path"] = data_path.string();
  j["levels"] = json::array();
  for (const auto& r : restrictions) j["levels"].push_back(r.key());
  j["seeds"] = seeds;
  json b;
  b["kind"] = backend.kind == BackendKind::stub ? "stub" : "http";
  b["stub_seed"] = backend.stub_seed;
  b["stub_table"] = backend.stub_table ? json(backend.stub_table->string()) : json(nullptr);
  b["endpoint"] = backend.http.endpoint;
  b["model"] = backend.http.model;
  b["connect_timeout_ms"] = backend.http.connect_timeout.count();
  b["read_timeout_ms"] = backend.http.read_timeout.count();
  b["max_in_flight"] = backend.http.max_in_flight;
  b["max_attempts"] = backend.http.max_attempts;
  b["backoff_ms"] = backend.http.backoff_base.count();
  b["tokens_per_word"] = backend.http.tokens_per_word;
  b["send_seed"] = backend.http.send_seed;
  j["backend"] = b;
  j["question_generation"] = params_json(selftalk.question_params);
  j["answer_generation"] = params_json(selftalk.answer_params);
  j["overlap_filter"] = to_string(selftalk.overlap);
  j["score_mode"] = to_string(score_mode);
  j["cache_dir"] = cache_dir ? json(cache_dir->string()) : json(nullptr);
  j["max_instances"] = max_instances ? json(*max_instances) : json(nullptr);
  j["prefix_registry"] = prefix_registry ? json(prefix_registry->string()) : json(nullptr);
  j["report_out"] = report_out ? json(report_out->string()) : json(nullptr);
  j["skip_bad_lines"] = skip_bad_lines;
  j["jobs"] = jobs;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("dataset")) c.dataset = parse_dataset_kind(j["dataset"].get<std::string>());
    if (j.contains("data_path") && j["data_path"].is_string()) c.data_path = j["data_path"].get<std::string>();
    if (j.contains("levels")) c.restrictions = parse_levels(j["levels"]);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::int64_t>>();
    if (j.contains("backend")) {
      const auto& b = j["backend"];
      auto kind = b.value("kind", std::string("stub"));
      if (kind == "stub") {
        c.backend.kind = BackendKind::stub;
      } else if (kind == "http") {
        c.backend.kind = BackendKind::http;
      } else {
        throw ConfigError("backend kind must be 'stub' or 'http'");
      }
      c.backend.stub_seed = b.value("stub_seed", std::uint64_t{0});
      c.backend.stub_table = optional_path(b, "stub_table");
      auto& h = c.backend.http;
      h.endpoint = b.value("endpoint", h.endpoint);
      h.model = b.value("model", h.model);
      h.connect_timeout = std::chrono::milliseconds(b.value("connect_timeout_ms", h.connect_timeout.count()));
      h.read_timeout = std::chrono::milliseconds(b.value("read_timeout_ms", h.read_timeout.count()));
      h.max_in_flight = b.value("max_in_flight", h.max_in_flight);
      h.max_attempts = b.value("max_attempts", h.max_attempts);
      h.backoff_base = std::chrono::milliseconds(b.value("backoff_ms", h.backoff_base.count()));
      h.tokens_per_word = b.value("tokens_per_word", h.tokens_per_word);
      h.send_seed = b.value("send_seed", h.send_seed);
      if (b.contains("api_key")) throw ConfigError("API keys are read from the environment, not the config file");
    }
    if (j.contains("question_generation")) c.selftalk.question_params = params_from(j["question_generation"]);
    if (j.contains("answer_generation")) c.selftalk.answer_params = params_from(j["answer_generation"]);
    if (j.contains("overlap_filter")) c.selftalk.overlap = parse_overlap_filter(j["overlap_filter"].get<std::string>());
    if (j.contains("score_mode")) c.score_mode = parse_score_mode(j["score_mode"].get<std::string>());
    c.cache_dir = optional_path(j, "cache_dir");
    if (j.contains("max_instances") && !j["max_instances"].is_null()) {
      c.max_instances = j["max_instances"].get<std::size_t>();
    }
    c.prefix_registry = optional_path(j, "prefix_registry");
    c.report_out = optional_path(j, "report_out");
    c.skip_bad_lines = j.value("skip_bad_lines", false);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

std::vector<Restriction> default_restrictions(DatasetKind dataset, const PrefixRegistry& registry) {
  std::vector<Restriction> out{Restriction::choice_baseline()};
  for (int l = TaxonomyLevel::kMin; l <= TaxonomyLevel::kMax; ++l) {
    if (registry.has_level(dataset, TaxonomyLevel(l))) out.push_back(Restriction::level(TaxonomyLevel(l)));
  }
  return out;
}

PrefixRegistry load_registry(const RunConfig& config) {
  return config.prefix_registry ? PrefixRegistry::load(*config.prefix_registry) : PrefixRegistry::bundled();
}

std::shared_ptr<Backend> make_backend(const RunConfig& config, std::shared_ptr<RequestLog> log) {
  std::shared_ptr<Backend> backend;
  if (config.backend.kind == BackendKind::stub) {
    std::optional<StubTable> table;
    if (config.backend.stub_table) table = StubTable::load(*config.backend.stub_table);
    backend = std::make_shared<StubBackend>(config.backend.stub_seed, std::move(table));
  } else {
    backend = std::make_shared<HttpBackend>(config.backend.http);
  }
  if (log) backend->attach_log(std::move(log));
  if (config.cache_dir) {
    backend = std::make_shared<CachingBackend>(backend, std::make_shared<ResponseCache>(*config.cache_dir));
  }
  return backend;
}

std::vector<QAInstance> filter_valid(std::span<const QAInstance> instances,
                                     const std::map<std::string, ClarificationSet>& sets,
                                     std::span<const Restriction> restrictions) {
  std::vector<QAInstance> out;
  for (const auto& inst : instances) {
    auto it = sets.find(inst.id);
    if (it == sets.end() || it->second.empty()) continue;
    bool ok = true;
    for (const auto& r : restrictions) {
      if (r.taxonomy_level() && !it->second.has_level(*r.taxonomy_level())) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(inst);
  }
  return out;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  // Welford's update; exact when every value is the same.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    ++n;
    double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  if (n < 2) return {mean, 0.0};
  return {mean, std::sqrt(m2 / static_cast<double>(n - 1))};
}

std::vector<AggregateRow> aggregate_rows(DatasetKind dataset, std::span<const Restriction> restrictions,
                                         std::span<const SeedRow> rows) {
  std::optional<TaxonomyLevel> proximal;
  try {
    proximal = proximal_level(dataset);
  } catch (const UndefinedProximalContext&) {
  }
  std::vector<AggregateRow> out;
  for (const auto& r : restrictions) {
    AggregateRow agg;
    agg.restriction = r;
    agg.label = r.label(dataset);
    agg.proximal = proximal && r.taxonomy_level() == proximal;
    std::vector<double> acc;
    std::vector<double> valid;
    for (const auto& row : rows) {
      if (row.restriction != r) continue;
      valid.push_back(static_cast<double>(row.valid_count));
      if (row.accuracy) acc.push_back(*row.accuracy);
    }
    std::tie(agg.mean_valid, agg.std_valid) = mean_std(valid);
    agg.defined_seeds = acc.size();
    if (!acc.empty()) {
      auto [m, s] = mean_std(acc);
      agg.mean_accuracy = m;
      agg.std_accuracy = s;
    }
    out.push_back(std::move(agg));
  }
  return out;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        if (failed.load()) return;
        auto i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::map<std::string, ClarificationSet> generate_all(std::span<const QAInstance> instances,
                                                     std::span<const PrefixTemplate> registry, std::int64_t seed,
                                                     Backend& backend, const SelfTalkParams& params, int jobs) {
  std::vector<ClarificationSet> sets(instances.size());
  parallel_for(instances.size(), jobs, [&](std::size_t i) {
    sets[i] = generate_clarifications(backend, instances[i], registry, seed, params);
  });
  std::map<std::string, ClarificationSet> out;
  for (auto& s : sets) {
    auto id = s.instance_id;
    out.emplace(std::move(id), std::move(s));
  }
  return out;
}

EvalReport evaluate(const RunConfig& config, std::span<const QAInstance> instances, const PrefixRegistry& registry,
                    Backend& backend, std::size_t total_instances) {
  config.validate(registry);
  auto templates = registry.prefixes_for(config.dataset);

  EvalReport report;
  report.dataset = config.dataset;
  report.total_instances = total_instances;
  report.evaluated_instances = instances.size();
  report.config = config.to_json();

  std::size_t seeds_done = 0;
  for (auto seed : config.seeds) {
    std::atomic<std::size_t> done{0};
    try {
      auto sets = generate_all(instances, templates, seed, backend, config.selftalk, config.jobs);
      auto valid = filter_valid(instances, sets, config.restrictions);

      SeedSummary summary{seed, valid.size(), 0};
      for (const auto& [id, set] : sets) summary.name_not_found_skips += set.skipped_templates.size();
      report.seeds.push_back(summary);

      // correct[i][r]: whether restriction r answered valid instance i.
      std::vector<std::vector<char>> correct(valid.size(), std::vector<char>(config.restrictions.size(), 0));
      parallel_for(valid.size(), config.jobs, [&](std::size_t i) {
        const auto& inst = valid[i];
        auto matrix = score_all(inst, sets.at(inst.id), backend, config.score_mode);
        for (std::size_t r = 0; r < config.restrictions.size(); ++r) {
          correct[i][r] = select(matrix, config.restrictions[r]).chosen_option == inst.gold_index;
        }
        ++done;
      });

      for (std::size_t r = 0; r < config.restrictions.size(); ++r) {
        SeedRow row;
        row.restriction = config.restrictions[r];
        row.seed = seed;
        row.valid_count = valid.size();
        for (const auto& c : correct) row.correct += c[r] ? 1 : 0;
        if (!valid.empty()) row.accuracy = static_cast<double>(row.correct) / static_cast<double>(valid.size());
        report.seed_rows.push_back(row);
      }
    } catch (const BackendUnavailable& e) {
      throw EvalAborted("aborted during seed " + std::to_string(seed) + " (" + std::to_string(seeds_done) + " of " +
                        std::to_string(config.seeds.size()) + " seeds complete, " + std::to_string(done.load()) +
                        " instances scored in this seed): " + e.what());
    }
    ++seeds_done;
  }
  report.aggregate = aggregate_rows(config.dataset, config.restrictions, report.seed_rows);
  return report;
}

std::vector<QAInstance> load_instances(const RunConfig& config, std::size_t* total) {
  LoadOptions opts;
  opts.skip_bad_lines = config.skip_bad_lines;
  auto instances = load_dataset(config.data_path, config.dataset, opts);
  if (total) *total = instances.size();
  if (config.max_instances && instances.size() > *config.max_instances) instances.resize(*config.max_instances);
  return instances;
}

EvalReport evaluate(const RunConfig& base, std::shared_ptr<RequestLog> log) {
  base.check_inputs();
  auto registry = load_registry(base);
  auto config = base;
  if (config.restrictions.empty()) config.restrictions = default_restrictions(config.dataset, registry);
  config.validate(registry);
  std::size_t total = 0;
  auto instances = load_instances(config, &total);
  auto backend = make_backend(config, std::move(log));
  return evaluate(config, instances, registry, *backend, total);
}

}  // namespace bloomqa
