#include "bloomqa/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bloomqa/cache.hpp"
#include "bloomqa/datasets.hpp"
#include "bloomqa/errors.hpp"

extern char** environ;

namespace bloomqa::cli {

using nlohmann::json;
namespace fs = std::filesystem;

Environment process_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    std::string kv(*e);
    auto eq = kv.find('=');
    if (eq != std::string::npos) env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return env;
}

namespace {

// Flag values as given on the command line; only options that were
// actually passed end up in the flag layer.
struct Flags {
  std::string config;
  std::string dataset;
  std::string data_path;
  std::string levels;
  std::string seeds;
  std::string backend;
  std::string endpoint;
  std::string model;
  std::string stub_table;
  std::uint64_t stub_seed = 0;
  std::string cache_dir;
  std::size_t max_instances = 0;
  std::string score_mode;
  std::string overlap_filter;
  std::string report_out;
  std::string prefix_registry;
  int jobs = 0;
  bool skip_bad_lines = false;
  std::string request_log;

  // gen-clarifications / inspect
  std::string out;
  std::string instance;
  std::int64_t seed = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Config file (JSON, comments allowed)");
  cmd->add_option("--dataset", f.dataset, "copa | commonsense_qa | social_iqa | winogrande");
  cmd->add_option("--data-path", f.data_path, "Dev set in JSON-lines format");
  cmd->add_option("--levels", f.levels, "Comma-separated restrictions, e.g. 1,2,choice");
  cmd->add_option("--seeds", f.seeds, "Comma-separated clarification sampling seeds");
  cmd->add_option("--backend", f.backend, "http | stub")->check(CLI::IsMember({"http", "stub"}));
  cmd->add_option("--endpoint", f.endpoint, "Completions endpoint URL");
  cmd->add_option("--model", f.model, "Model id sent to the endpoint");
  cmd->add_option("--stub-table", f.stub_table, "Explicit stub responses (JSON)");
  cmd->add_option("--stub-seed", f.stub_seed, "Seed of the stub backend's hash mode");
  cmd->add_option("--cache-dir", f.cache_dir, "Response cache directory");
  cmd->add_option("--max-instances", f.max_instances, "Evaluate only the first N instances");
  cmd->add_option("--score-mode", f.score_mode, "normalized | sum")->check(CLI::IsMember({"normalized", "sum"}));
  cmd->add_option("--overlap-filter", f.overlap_filter, "off | require | forbid")
      ->check(CLI::IsMember({"off", "require", "forbid"}));
  cmd->add_option("--report-out", f.report_out, "Machine-readable report path");
  cmd->add_option("--prefix-registry", f.prefix_registry, "Replacement prefix registry file");
  cmd->add_option("--jobs", f.jobs, "Instances processed concurrently");
  cmd->add_flag("--skip-bad-lines", f.skip_bad_lines, "Skip malformed dataset lines instead of failing");
  cmd->add_option("--request-log", f.request_log, "Write every backend request (JSON lines) here");
}

bool given(const CLI::App* cmd, const std::string& name) { return cmd->count(name) > 0; }

std::vector<std::int64_t> parse_seeds(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("invalid seed '" + item + "'");
    }
  }
  return out;
}

json flag_layer(const CLI::App* cmd, const Flags& f) {
  json j = json::object();
  json b = json::object();
  if (given(cmd, "--dataset")) j["dataset"] = f.dataset;
  if (given(cmd, "--data-path")) j["data_path"] = f.data_path;
  if (given(cmd, "--levels")) j["levels"] = f.levels;
  if (given(cmd, "--seeds")) j["seeds"] = parse_seeds(f.seeds);
  if (given(cmd, "--backend")) b["kind"] = f.backend;
  if (given(cmd, "--endpoint")) b["endpoint"] = f.endpoint;
  if (given(cmd, "--model")) b["model"] = f.model;
  if (given(cmd, "--stub-table")) b["stub_table"] = f.stub_table;
  if (given(cmd, "--stub-seed")) b["stub_seed"] = f.stub_seed;
  if (!b.empty()) j["backend"] = b;
  if (given(cmd, "--cache-dir")) j["cache_dir"] = f.cache_dir;
  if (given(cmd, "--max-instances")) j["max_instances"] = f.max_instances;
  if (given(cmd, "--score-mode")) j["score_mode"] = f.score_mode;
  if (given(cmd, "--overlap-filter")) j["overlap_filter"] = f.overlap_filter;
  if (given(cmd, "--report-out")) j["report_out"] = f.report_out;
  if (given(cmd, "--prefix-registry")) j["prefix_registry"] = f.prefix_registry;
  if (given(cmd, "--jobs")) j["jobs"] = f.jobs;
  if (given(cmd, "--skip-bad-lines")) j["skip_bad_lines"] = f.skip_bad_lines;
  return j;
}

json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    auto j = json::parse(ss.str(), nullptr, true, /*ignore_comments=*/true);
    if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
}

void write_request_log(const std::string& path, const RequestLog& log) {
  if (path.empty()) return;
  std::string text;
  for (const auto& r : log.snapshot()) text += r.to_json().dump() + "\n";
  write_file(path, text);
}

struct Prepared {
  RunConfig config;
  PrefixRegistry registry;
};

Prepared prepare(const CLI::App* cmd, const Flags& f, const Environment& env) {
  auto config = resolve_config(read_config_file(f.config), flag_layer(cmd, f), env);
  config.check_inputs();
  auto registry = load_registry(config);
  if (config.restrictions.empty()) config.restrictions = default_restrictions(config.dataset, registry);
  config.validate(registry);
  return {std::move(config), std::move(registry)};
}

int cmd_validate(const CLI::App* cmd, const Flags& f, const Environment& env, std::ostream& out) {
  auto p = prepare(cmd, f, env);
  out << "config OK\n" << p.config.to_json().dump(2) << "\n";
  return kExitOk;
}

int cmd_run_eval(const CLI::App* cmd, const Flags& f, const Environment& env, std::ostream& out) {
  auto p = prepare(cmd, f, env);
  auto log = std::make_shared<RequestLog>();
  std::size_t total = 0;
  auto instances = load_instances(p.config, &total);
  auto backend = make_backend(p.config, log);
  EvalReport report;
  try {
    report = evaluate(p.config, instances, p.registry, *backend, total);
  } catch (...) {
    write_request_log(f.request_log, *log);
    throw;
  }
  write_request_log(f.request_log, *log);

  auto json_path = p.config.report_out.value_or(fs::path("bloomqa_report.json"));
  auto table_path = json_path;
  table_path.replace_extension(".txt");
  auto table = report.to_table();
  write_file(json_path, report.to_json_text());
  write_file(table_path, table);
  out << table;
  out << "report: " << json_path.string() << "\n";
  return kExitOk;
}

int cmd_gen_clarifications(const CLI::App* cmd, const Flags& f, const Environment& env, std::ostream& out) {
  auto p = prepare(cmd, f, env);
  auto log = std::make_shared<RequestLog>();
  auto instances = load_instances(p.config);
  auto backend = make_backend(p.config, log);
  auto templates = p.registry.prefixes_for(p.config.dataset);

  std::string text;
  std::size_t sets = 0;
  try {
    for (auto seed : p.config.seeds) {
      auto by_id = generate_all(instances, templates, seed, *backend, p.config.selftalk, p.config.jobs);
      for (const auto& inst : instances) {
        text += by_id.at(inst.id).to_json().dump() + "\n";
        ++sets;
      }
    }
  } catch (...) {
    write_request_log(f.request_log, *log);
    throw;
  }
  write_request_log(f.request_log, *log);
  fs::path path = f.out.empty() ? fs::path("clarifications.jsonl") : fs::path(f.out);
  write_file(path, text);
  out << "wrote " << sets << " clarification sets to " << path.string() << "\n";
  return kExitOk;
}

int cmd_inspect(const CLI::App* cmd, const Flags& f, const Environment& env, std::ostream& out) {
  auto p = prepare(cmd, f, env);
  auto instances = load_instances(p.config);
  const QAInstance* inst = nullptr;
  for (const auto& i : instances) {
    if (i.id == f.instance) inst = &i;
  }
  if (!inst) throw ConfigError("no instance with id '" + f.instance + "'");
  auto seed = given(cmd, "--seed") ? f.seed : p.config.seeds.front();

  auto log = std::make_shared<RequestLog>();
  auto backend = make_backend(p.config, log);
  auto set = generate_clarifications(*backend, *inst, p.registry.prefixes_for(p.config.dataset), seed,
                                     p.config.selftalk);

  out << "instance " << inst->id << " (seed " << seed << ")\n";
  out << "context: " << inst->context() << "\n";
  for (std::size_t o = 0; o < inst->options.size(); ++o) {
    out << "  option " << o << (o == inst->gold_index ? " (gold)" : "") << ": " << inst->options[o] << "\n";
  }
  if (set.empty()) {
    out << "no clarifications generated\n";
  } else {
    auto matrix = score_all(*inst, set, *backend, p.config.score_mode);
    out << "score matrix (" << to_string(matrix.mode()) << "):\n";
    for (std::size_t j = 0; j < matrix.rows(); ++j) {
      const auto& c = matrix.clarification(j);
      out << "  j=" << j << " L" << c.level.value() << " " << c.question.full_question << " | " << c.answer_text
          << "\n     ";
      for (std::size_t o = 0; o < matrix.options(); ++o) {
        out << " o" << o << "=" << std::fixed << std::setprecision(4) << matrix.value(j, o);
      }
      out << "\n";
    }
    for (const auto& r : p.config.restrictions) {
      out << r.label(p.config.dataset) << ": ";
      try {
        auto sel = select(matrix, r);
        out << "option " << sel.chosen_option << " via j=" << sel.chosen_clarification << " score "
            << std::fixed << std::setprecision(4) << sel.best_score
            << (sel.chosen_option == inst->gold_index ? " (correct)" : " (wrong)") << "\n";
      } catch (const NoClarificationAtLevel&) {
        out << "no clarification at this level\n";
      }
    }
  }
  out << "backend requests: " << log->size() << "\n";
  write_request_log(f.request_log, *log);
  return kExitOk;
}

}  // namespace

RunConfig resolve_config(const json& file_layer, const json& flag_layer, const Environment& env) {
  auto merged = RunConfig{}.to_json();
  merged.merge_patch(file_layer);
  if (auto it = env.find(kEndpointEnv); it != env.end() && !it->second.empty()) {
    merged["backend"]["endpoint"] = it->second;
  }
  merged.merge_patch(flag_layer);
  auto config = RunConfig::from_json(merged);
  if (auto it = env.find(kApiKeyEnv); it != env.end()) config.backend.http.api_key = it->second;
  return config;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env) {
  CLI::App app{"Bloom's Taxonomy guided self-talk for zero-shot multiple-choice QA", "bloomqa"};
  app.require_subcommand(1, 1);
  Flags f;
  auto* run_eval = app.add_subcommand("run-eval", "Run the multi-seed evaluation and write reports");
  auto* gen = app.add_subcommand("gen-clarifications", "Generate clarification sets and write them to disk");
  auto* inspect = app.add_subcommand("inspect", "Show one instance's score matrix and selections");
  auto* validate = app.add_subcommand("validate-config", "Check a configuration without contacting any backend");
  for (auto* cmd : {run_eval, gen, inspect, validate}) add_common(cmd, f);
  gen->add_option("--out", f.out, "Output JSON-lines file");
  inspect->add_option("--instance", f.instance, "Instance id")->required();
  inspect->add_option("--seed", f.seed, "Clarification seed (default: first configured seed)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (run_eval->parsed()) return cmd_run_eval(run_eval, f, env, out);
    if (gen->parsed()) return cmd_gen_clarifications(gen, f, env, out);
    if (inspect->parsed()) return cmd_inspect(inspect, f, env, out);
    return cmd_validate(validate, f, env, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace bloomqa::cli
