#include "bloomqa/lm_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bloomqa/digest.hpp"
#include "bloomqa/errors.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

using nlohmann::json;

GenParams GenParams::words(int budget, double p, int n, std::int64_t seed) {
  GenParams g;
  g.nucleus_p = p;
  g.max_new_words = budget;
  g.num_samples = n;
  g.seed = seed;
  return g;
}

GenParams GenParams::tokens(int budget, double p, int n, std::int64_t seed) {
  GenParams g;
  g.nucleus_p = p;
  g.max_new_tokens = budget;
  g.num_samples = n;
  g.seed = seed;
  return g;
}

void GenParams::validate() const {
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) {
    throw std::invalid_argument("nucleus_p must be in (0, 1]");
  }
  if (max_new_words.has_value() == max_new_tokens.has_value()) {
    throw std::invalid_argument("exactly one of max_new_words / max_new_tokens must be set");
  }
  if (budget() < 0) throw std::invalid_argument("generation budget must be non-negative");
  if (num_samples < 1) throw std::invalid_argument("num_samples must be at least 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be non-negative");
}

int GenParams::budget() const { return max_new_words ? *max_new_words : max_new_tokens.value_or(0); }

json GenParams::to_json() const {
  json j;
  j["top_p"] = nucleus_p;
  if (max_new_words) j["max_new_words"] = *max_new_words;
  if (max_new_tokens) j["max_new_tokens"] = *max_new_tokens;
  j["n"] = num_samples;
  j["seed"] = seed;
  j["stop_at"] = stop_at ? json(std::string(1, *stop_at)) : json(nullptr);
  j["temperature"] = temperature;
  return j;
}

GenParams GenParams::from_json(const json& j) {
  GenParams g;
  g.nucleus_p = j.at("top_p").get<double>();
  if (j.contains("max_new_words")) g.max_new_words = j["max_new_words"].get<int>();
  if (j.contains("max_new_tokens")) g.max_new_tokens = j["max_new_tokens"].get<int>();
  g.num_samples = j.at("n").get<int>();
  g.seed = j.value("seed", std::int64_t{0});
  if (j.contains("stop_at") && j["stop_at"].is_string()) {
    auto s = j["stop_at"].get<std::string>();
    if (s.size() != 1) throw std::invalid_argument("stop_at must be a single character");
    g.stop_at = s[0];
  }
  g.temperature = j.value("temperature", 1.0);
  g.validate();
  return g;
}

std::string_view to_string(ScoreSource s) noexcept {
  switch (s) {
    case ScoreSource::stub: return "stub";
    case ScoreSource::echo: return "echo";
    case ScoreSource::echo_trimmed: return "echo_trimmed";
  }
  return "unknown";
}

ScoreValue ScoreValue::from_total(double total, int token_count, ScoreSource source) {
  if (token_count < 1) token_count = 1;
  return {total, token_count, total / token_count, source};
}

json ScoreValue::to_json() const {
  return {{"total_logprob", total_logprob},
          {"token_count", token_count},
          {"normalized", normalized},
          {"source", std::string(to_string(source))}};
}

ScoreValue ScoreValue::from_json(const json& j) {
  ScoreValue v;
  v.total_logprob = j.at("total_logprob").get<double>();
  v.token_count = j.at("token_count").get<int>();
  v.normalized = j.at("normalized").get<double>();
  auto src = j.value("source", std::string("stub"));
  if (src == "echo") {
    v.source = ScoreSource::echo;
  } else if (src == "echo_trimmed") {
    v.source = ScoreSource::echo_trimmed;
  } else {
    v.source = ScoreSource::stub;
  }
  return v;
}

std::string_view to_string(ScoreMode m) noexcept { return m == ScoreMode::normalized ? "normalized" : "sum"; }

ScoreMode parse_score_mode(std::string_view s) {
  if (s == "normalized") return ScoreMode::normalized;
  if (s == "sum") return ScoreMode::sum;
  throw std::invalid_argument("score mode must be 'normalized' or 'sum'");
}

json BackendRequestRecord::to_json(bool with_timestamp) const {
  json j;
  j["kind"] = kind == RequestKind::generate ? "generate" : "score";
  j["backend"] = backend_id;
  j["prompt"] = prompt;
  j["params"] = params ? params->to_json() : json(nullptr);
  j["response_digest"] = response_digest;
  if (with_timestamp) {
    j["sequence"] = sequence;
    j["timestamp_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(timestamp.time_since_epoch()).count();
  }
  return j;
}

void RequestLog::append(BackendRequestRecord record) {
  std::lock_guard lock(mu_);
  record.sequence = next_++;
  records_.push_back(std::move(record));
}

std::vector<BackendRequestRecord> RequestLog::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t RequestLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

void RequestLog::clear() {
  std::lock_guard lock(mu_);
  records_.clear();
}

std::string RequestLog::canonical_text() const {
  std::vector<std::string> lines;
  for (const auto& r : snapshot()) lines.push_back(r.to_json(false).dump());
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string truncate_completion(std::string_view raw, const GenParams& params) {
  std::string out(raw);
  if (params.stop_at) {
    auto cut = out.find(*params.stop_at);
    if (cut != std::string::npos) out.resize(cut + 1);
  }
  if (params.max_new_words) {
    auto words = text::split_words(out);
    auto budget = static_cast<std::size_t>(*params.max_new_words);
    if (words.size() > budget) {
      bool lead = !out.empty() && std::isspace(static_cast<unsigned char>(out.front()));
      out = lead && budget > 0 ? " " : "";
      for (std::size_t i = 0; i < budget; ++i) {
        if (i) out += ' ';
        out += words[i];
      }
    }
  }
  return out;
}

std::vector<std::string> Backend::generate(std::string_view prompt, const GenParams& params) {
  if (text::trim(prompt).empty()) throw std::invalid_argument("generate: empty prompt");
  params.validate();
  auto n = static_cast<std::size_t>(params.num_samples);
  if (params.budget() == 0) return std::vector<std::string>(n);

  auto raw = do_generate(prompt, params);
  raw.resize(n);
  std::vector<std::string> out;
  out.reserve(n);
  for (const auto& r : raw) out.push_back(truncate_completion(r, params));
  if (log_) record(RequestKind::generate, prompt, params, json(out).dump());
  return out;
}

ScoreValue Backend::score(std::string_view text) {
  if (text::trim(text).empty()) return ScoreValue::from_total(0.0, 1, ScoreSource::stub);
  auto v = do_score(text);
  if (!std::isfinite(v.total_logprob) || v.total_logprob > 0.0 || v.token_count < 1) {
    throw TokenizationFailure("backend returned an invalid score for: " + std::string(text.substr(0, 60)));
  }
  if (log_) record(RequestKind::score, text, std::nullopt, v.to_json().dump());
  return v;
}

void Backend::record(RequestKind kind, std::string_view prompt, const std::optional<GenParams>& params,
                     const std::string& response) {
  BackendRequestRecord rec;
  rec.kind = kind;
  rec.backend_id = id();
  rec.prompt = std::string(prompt);
  rec.params = params;
  rec.timestamp = std::chrono::system_clock::now();
  rec.response_digest = sha256_hex(response);
  log_->append(std::move(rec));
}

}  // namespace bloomqa
