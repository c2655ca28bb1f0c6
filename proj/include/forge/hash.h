#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace forge {

// Lowercase hex SHA-256 digests.
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

// Derives an independent 64-bit seed for a named consumer of a top-level
// seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view name);

}  // namespace forge
