#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "bloomqa/lm_backend.hpp"

namespace bloomqa {

struct HttpBackendConfig {
  // Full URL of an OpenAI-compatible completions endpoint.
  std::string endpoint = "http://127.0.0.1:8000/v1/completions";
  std::string model;
  std::string api_key;
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{120000};
  int max_in_flight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  // max_tokens sent for word budgets; the word budget itself is enforced
  // after the response arrives.
  int tokens_per_word = 2;
  bool send_seed = true;
};

struct ParsedEndpoint {
  std::string scheme_host_port;
  std::string path;
};

// Splits "http://host:port/v1/completions". Throws ConfigError.
ParsedEndpoint parse_endpoint(const std::string& url);

// Completions-API client. Generation maps GenParams onto max_tokens/top_p/n/
// seed; scoring asks the server to echo the prompt's own token
// log-probabilities with zero new tokens, falling back to one new token
// (dropped) when the server rejects max_tokens=0.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string id() const override;

  const HttpBackendConfig& config() const noexcept { return config_; }

 protected:
  std::vector<std::string> do_generate(std::string_view prompt, const GenParams& params) override;
  ScoreValue do_score(std::string_view text) override;

 private:
  struct Response {
    int status = 0;
    std::string body;
  };

  // Retries transport failures, 429 and 5xx with exponential backoff.
  // Other statuses are returned to the caller. Throws BackendUnavailable.
  Response post(const std::string& body);

  HttpBackendConfig config_;
  ParsedEndpoint endpoint_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
  std::atomic<bool> zero_token_echo_{true};
};

}  // namespace bloomqa
