#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bloomqa {

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

// Stable 64-bit hash used by the stub backend; must never change between
// releases or cached stub runs stop matching.
std::uint64_t stable_hash64(std::string_view data, std::uint64_t seed = 0);

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace bloomqa
