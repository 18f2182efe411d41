#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace bloomqa {

// Sampling parameters for one generation request. Exactly one of the two
// budgets is set: word budgets are enforced client-side by truncation,
// token budgets are passed to the backend as max_tokens.
struct GenParams {
  double nucleus_p = 1.0;
  std::optional<int> max_new_words;
  std::optional<int> max_new_tokens;
  int num_samples = 1;
  std::int64_t seed = 0;
  std::optional<char> stop_at;
  // Not set by the method itself; left neutral and exposed as config.
  double temperature = 1.0;

  static GenParams words(int budget, double p, int n, std::int64_t seed = 0);
  static GenParams tokens(int budget, double p, int n, std::int64_t seed = 0);

  // Throws std::invalid_argument.
  void validate() const;
  int budget() const;

  nlohmann::json to_json() const;
  static GenParams from_json(const nlohmann::json& j);

  bool operator==(const GenParams&) const = default;
};

enum class ScoreSource {
  stub,
  // Full-text token log-probabilities echoed back by the server.
  echo,
  // Server refused a zero-token echo; one token was generated and its
  // log-probability dropped.
  echo_trimmed,
};

std::string_view to_string(ScoreSource s) noexcept;

struct ScoreValue {
  double total_logprob = 0.0;
  int token_count = 1;
  double normalized = 0.0;
  ScoreSource source = ScoreSource::stub;

  static ScoreValue from_total(double total, int token_count, ScoreSource source);

  nlohmann::json to_json() const;
  static ScoreValue from_json(const nlohmann::json& j);

  bool operator==(const ScoreValue&) const = default;
};

enum class ScoreMode { normalized, sum };

std::string_view to_string(ScoreMode m) noexcept;
ScoreMode parse_score_mode(std::string_view s);

inline double score_field(const ScoreValue& v, ScoreMode mode) {
  return mode == ScoreMode::normalized ? v.normalized : v.total_logprob;
}

enum class RequestKind { generate, score };

struct BackendRequestRecord {
  std::uint64_t sequence = 0;
  RequestKind kind = RequestKind::generate;
  std::string backend_id;
  std::string prompt;
  std::optional<GenParams> params;
  std::chrono::system_clock::time_point timestamp;
  std::string response_digest;

  nlohmann::json to_json(bool with_timestamp = true) const;
};

// Append-only, thread-safe; sequence numbers give appends a total order.
class RequestLog {
 public:
  void append(BackendRequestRecord record);
  std::vector<BackendRequestRecord> snapshot() const;
  std::size_t size() const;
  void clear();

  // One JSON document per line, timestamps omitted, sorted by content so
  // runs with concurrent requests compare equal.
  std::string canonical_text() const;

 private:
  mutable std::mutex mu_;
  std::uint64_t next_ = 0;
  std::vector<BackendRequestRecord> records_;
};

// Cuts a raw completion at the first stop character (inclusive), then to
// the word budget when one is set.
std::string truncate_completion(std::string_view raw, const GenParams& params);

// A language model that can sample continuations and score text.
// Implementations must be safe for concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  // Exactly params.num_samples completions, each within budget.
  std::vector<std::string> generate(std::string_view prompt, const GenParams& params);

  // Sum of token log-probabilities of `text`. Empty text scores 0 over one
  // token without contacting the backend.
  ScoreValue score(std::string_view text);

  // Identifies the model behind the backend; part of every cache key.
  virtual std::string id() const = 0;

  void attach_log(std::shared_ptr<RequestLog> log) { log_ = std::move(log); }
  const std::shared_ptr<RequestLog>& log() const noexcept { return log_; }

 protected:
  virtual std::vector<std::string> do_generate(std::string_view prompt, const GenParams& params) = 0;
  virtual ScoreValue do_score(std::string_view text) = 0;

 private:
  void record(RequestKind kind, std::string_view prompt, const std::optional<GenParams>& params,
              const std::string& response);

  std::shared_ptr<RequestLog> log_;
};

}  // namespace bloomqa
