#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace promptopt {

// 64-bit FNV-1a. Stable across platforms and builds; used for prompt
// fingerprints, stream derivation and dataset content hashes.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept;

// Lower-case, zero-padded 16-digit hex.
std::string to_hex(std::uint64_t value);

}  // namespace promptopt
