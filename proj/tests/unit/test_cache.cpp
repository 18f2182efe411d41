#include <thread>

#include "bloomqa/cache.hpp"
#include "bloomqa/stub_backend.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace bloomqa;
using bloomqa::testing::TempDir;

TEST_CASE("put then get returns the same bytes") {
  TempDir dir("cache");
  ResponseCache cache(dir.path());
  auto key = ResponseCache::make_key("stub:0", RequestKind::score, "some text", std::nullopt);
  CHECK_FALSE(cache.get(key).has_value());
  std::string payload = "{\"x\": \"\\u00e9 bytes \\n\"}\twith\0nul";
  cache.put(key, payload);
  auto got = cache.get(key);
  REQUIRE(got.has_value());
  CHECK(*got == payload);
  CHECK(cache.path_for(key).parent_path().filename() == key.substr(0, 2));
  CHECK(std::filesystem::exists(cache.path_for(key)));
}

TEST_CASE("keys cover backend, kind, prompt and params") {
  auto p = GenParams::words(6, 0.2, 5, 1);
  auto base = ResponseCache::make_key("stub:0", RequestKind::generate, "prompt", p);
  CHECK(base == ResponseCache::make_key("stub:0", RequestKind::generate, "prompt", p));
  CHECK(base != ResponseCache::make_key("stub:1", RequestKind::generate, "prompt", p));
  CHECK(base != ResponseCache::make_key("stub:0", RequestKind::score, "prompt", std::nullopt));
  CHECK(base != ResponseCache::make_key("stub:0", RequestKind::generate, "prompt ", p));
  CHECK(base != ResponseCache::make_key("stub:0", RequestKind::generate, "prompt", GenParams::words(6, 0.2, 5, 2)));
  CHECK(base.size() == 64);
}

TEST_CASE("concurrent writers of one key leave one valid entry") {
  TempDir dir("cache");
  ResponseCache cache(dir.path());
  auto key = ResponseCache::make_key("stub:0", RequestKind::score, "contended", std::nullopt);
  std::vector<std::thread> writers;
  for (int t = 0; t < 8; ++t) {
    writers.emplace_back([&] {
      for (int i = 0; i < 25; ++i) cache.put(key, "same payload");
    });
  }
  for (auto& w : writers) w.join();
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
    if (e.is_regular_file()) ++files;
  }
  CHECK(files == 1);
  CHECK(cache.get(key) == std::optional<std::string>("same payload"));
  CHECK(cache.corrupt_entries() == 0);
}

TEST_CASE("a corrupted entry is a counted miss and gets regenerated") {
  TempDir dir("cache");
  auto cache = std::make_shared<ResponseCache>(dir.path());
  auto log = std::make_shared<RequestLog>();
  auto inner = std::make_shared<StubBackend>(3);
  inner->attach_log(log);
  CachingBackend backend(inner, cache);

  auto first = backend.score("flip me");
  CHECK(log->size() == 1);
  CHECK(backend.score("flip me") == first);
  CHECK(log->size() == 1);
  CHECK(backend.hits() == 1);

  auto path = cache->path_for(ResponseCache::make_key(inner->id(), RequestKind::score, "flip me", std::nullopt));
  auto bytes = testing::read_file(path);
  auto pos = bytes.find("total_logprob");
  REQUIRE(pos != std::string::npos);
  bytes[pos] ^= 0x01;
  testing::write_file(path, bytes);

  CHECK(backend.score("flip me") == first);
  CHECK(cache->corrupt_entries() == 1);
  CHECK(log->size() == 2);
  CHECK(backend.score("flip me") == first);
  CHECK(log->size() == 2);
}

TEST_CASE("warm cache serves generation without backend requests") {
  TempDir dir("cache");
  auto cache = std::make_shared<ResponseCache>(dir.path());
  auto log = std::make_shared<RequestLog>();
  auto inner = std::make_shared<StubBackend>(0);
  inner->attach_log(log);
  CachingBackend backend(inner, cache);
  auto p = GenParams::words(6, 0.2, 5, 9);
  auto cold = backend.generate("What is the definition of", p);
  CHECK(log->size() == 1);
  auto warm = backend.generate("What is the definition of", p);
  CHECK(warm == cold);
  CHECK(log->size() == 1);
  CHECK(backend.id() == inner->id());
}
