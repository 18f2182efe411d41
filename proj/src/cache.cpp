#include "bloomqa/cache.hpp"

#include <unistd.h>

#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "bloomqa/digest.hpp"
#include "bloomqa/errors.hpp"
#include "json.hpp"

namespace bloomqa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<CacheEntry> read_entry(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  auto doc = json::parse(ss.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw std::runtime_error("unparseable entry");
  CacheEntry e{doc.at("key").get<std::string>(), doc.at("value").get<std::string>(),
               doc.value("created_at", std::string())};
  if (sha256_hex(e.value) != doc.at("digest").get<std::string>()) throw std::runtime_error("digest mismatch");
  return e;
}

}  // namespace

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::string ResponseCache::make_key(std::string_view backend_id, RequestKind kind, std::string_view prompt,
                                    const std::optional<GenParams>& params) {
  json j;
  j["backend"] = backend_id;
  j["kind"] = kind == RequestKind::generate ? "generate" : "score";
  j["prompt"] = prompt;
  j["params"] = params ? params->to_json() : json(nullptr);
  return sha256_hex(j.dump());
}

fs::path ResponseCache::path_for(std::string_view key) const {
  std::string k(key);
  return dir_ / k.substr(0, 2) / (k + ".entry");
}

std::optional<std::string> ResponseCache::get(std::string_view key) const {
  auto path = path_for(key);
  try {
    auto entry = read_entry(path);
    if (!entry) return std::nullopt;
    if (entry->key != key) throw std::runtime_error("key mismatch");
    return std::move(entry->value);
  } catch (const std::exception& e) {
    ++corrupt_;
    std::cerr << "warning: ignoring corrupt cache entry " << path.string() << " (" << e.what() << ")\n";
    return std::nullopt;
  }
}

void ResponseCache::put(std::string_view key, std::string_view value) const {
  auto path = path_for(key);
  fs::create_directories(path.parent_path());

  json doc;
  doc["key"] = key;
  doc["value"] = value;
  doc["digest"] = sha256_hex(value);
  doc["created_at"] = utc_now();

  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << ::getpid() << "."
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
  auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache entry " + tmp.string());
    out << doc.dump();
    out.flush();
    if (!out) throw Error("cannot write cache entry " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot publish cache entry " + path.string());
  }
}

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<std::string> CachingBackend::do_generate(std::string_view prompt, const GenParams& params) {
  auto key = ResponseCache::make_key(inner_->id(), RequestKind::generate, prompt, params);
  if (auto hit = cache_->get(key)) {
    try {
      auto out = json::parse(*hit).get<std::vector<std::string>>();
      ++hits_;
      return out;
    } catch (const json::exception&) {
    }
  }
  ++misses_;
  auto out = inner_->generate(prompt, params);
  cache_->put(key, json(out).dump());
  return out;
}

ScoreValue CachingBackend::do_score(std::string_view text) {
  auto key = ResponseCache::make_key(inner_->id(), RequestKind::score, text, std::nullopt);
  if (auto hit = cache_->get(key)) {
    try {
      auto out = ScoreValue::from_json(json::parse(*hit));
      ++hits_;
      return out;
    } catch (const json::exception&) {
    }
  }
  ++misses_;
  auto out = inner_->score(text);
  cache_->put(key, out.to_json().dump());
  return out;
}

}  // namespace bloomqa
