#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "bloomqa/lm_backend.hpp"

namespace bloomqa {

struct CacheEntry {
  std::string key;
  std::string value;
  std::string created_at;
};

// Content-addressed store of backend responses, laid out as
// <dir>/<first two hex digits>/<key>.entry. Entries are written once via
// write-then-rename and carry a digest of their payload; an entry whose
// digest does not match is reported and treated as a miss.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  // Digest over the request identity.
  static std::string make_key(std::string_view backend_id, RequestKind kind, std::string_view prompt,
                              const std::optional<GenParams>& params);

  std::optional<std::string> get(std::string_view key) const;
  void put(std::string_view key, std::string_view value) const;

  std::filesystem::path path_for(std::string_view key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

  std::size_t corrupt_entries() const noexcept { return corrupt_.load(); }

 private:
  std::filesystem::path dir_;
  mutable std::atomic<std::size_t> corrupt_{0};
};

// Serves requests from the cache and forwards misses to `inner`. Attach the
// request log to the inner backend to see only real backend traffic.
class CachingBackend final : public Backend {
 public:
  CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }

 protected:
  std::vector<std::string> do_generate(std::string_view prompt, const GenParams& params) override;
  ScoreValue do_score(std::string_view text) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace bloomqa
