#include "bloomqa/http_backend.hpp"

#include <algorithm>
#include <thread>

#include "bloomqa/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace bloomqa {

using nlohmann::json;

ParsedEndpoint parse_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must start with http:// or https://: " + url);
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme: " + scheme);
  auto path_start = url.find('/', scheme_end + 3);
  ParsedEndpoint out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
    out.path = "/v1/completions";
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  if (out.scheme_host_port.size() <= scheme_end + 3) throw ConfigError("endpoint has no host: " + url);
  return out;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), endpoint_(parse_endpoint(config_.endpoint)) {
  if (config_.max_in_flight < 1 || config_.max_in_flight > 1024) {
    throw ConfigError("max_in_flight must be in 1..1024");
  }
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  in_flight_ = std::make_unique<std::counting_semaphore<1024>>(config_.max_in_flight);
}

std::string HttpBackend::id() const { return "http:" + config_.endpoint + "#" + config_.model; }

HttpBackend::Response HttpBackend::post(const std::string& body) {
  std::string last_error;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));

    in_flight_->acquire();
    httplib::Result result;
    {
      httplib::Client client(endpoint_.scheme_host_port);
      client.set_connection_timeout(config_.connect_timeout);
      client.set_read_timeout(config_.read_timeout);
      httplib::Headers headers;
      if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
      result = client.Post(endpoint_.path, headers, body, "application/json");
    }
    in_flight_->release();

    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    return {result->status, result->body};
  }
  throw BackendUnavailable("completions endpoint " + config_.endpoint + " unavailable after " +
                           std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

namespace {

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendUnavailable(std::string("malformed completions response: ") + e.what());
  }
}

}  // namespace

std::vector<std::string> HttpBackend::do_generate(std::string_view prompt, const GenParams& params) {
  json req;
  req["model"] = config_.model;
  req["prompt"] = std::string(prompt);
  req["max_tokens"] = params.max_new_tokens ? *params.max_new_tokens : *params.max_new_words * config_.tokens_per_word;
  req["top_p"] = params.nucleus_p;
  req["temperature"] = params.temperature;
  req["n"] = params.num_samples;
  if (config_.send_seed) req["seed"] = params.seed;

  auto resp = post(req.dump());
  if (resp.status != 200) {
    throw BackendUnavailable("completions request rejected with HTTP " + std::to_string(resp.status) + ": " +
                             resp.body.substr(0, 200));
  }
  auto doc = parse_body(resp.body);
  std::vector<std::pair<long, std::string>> choices;
  long fallback_index = 0;
  for (const auto& c : doc.value("choices", json::array())) {
    long index = c.contains("index") && c["index"].is_number_integer() ? c["index"].get<long>() : fallback_index;
    ++fallback_index;
    choices.emplace_back(index, c.value("text", std::string()));
  }
  std::stable_sort(choices.begin(), choices.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto& [i, t] : choices) out.push_back(std::move(t));
  return out;
}

ScoreValue HttpBackend::do_score(std::string_view text) {
  bool zero = zero_token_echo_.load();
  for (;;) {
    json req;
    req["model"] = config_.model;
    req["prompt"] = std::string(text);
    req["max_tokens"] = zero ? 0 : 1;
    req["echo"] = true;
    req["logprobs"] = 0;
    req["temperature"] = 0.0;
    auto resp = post(req.dump());
    if (resp.status >= 400 && resp.status < 500 && zero) {
      zero = false;
      zero_token_echo_.store(false);
      continue;
    }
    if (resp.status != 200) {
      throw BackendUnavailable("scoring request rejected with HTTP " + std::to_string(resp.status));
    }

    auto doc = parse_body(resp.body);
    const auto& choices = doc.value("choices", json::array());
    if (choices.empty() || !choices[0].contains("logprobs") || !choices[0]["logprobs"].is_object()) {
      throw TokenizationFailure("backend returned no logprobs");
    }
    const auto& lp = choices[0]["logprobs"];
    const auto& token_lps = lp.value("token_logprobs", json::array());
    const auto& offsets = lp.value("text_offset", json::array());
    std::size_t usable = token_lps.size();
    if (!zero) {
      // Drop the generated token: by offset when available, else the last.
      if (offsets.size() == token_lps.size()) {
        usable = 0;
        while (usable < offsets.size() && offsets[usable].get<long>() < static_cast<long>(text.size())) ++usable;
      } else if (usable > 0) {
        --usable;
      }
    }
    double total = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < usable; ++i) {
      // The first prompt token has no conditional probability.
      if (token_lps[i].is_null()) continue;
      total += token_lps[i].get<double>();
      ++count;
    }
    if (count == 0) throw TokenizationFailure("backend returned no usable token logprobs");
    return ScoreValue::from_total(total, count, zero ? ScoreSource::echo : ScoreSource::echo_trimmed);
  }
}

}  // namespace bloomqa
