#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace mtlab {

// 64-bit FNV-1a. Used for vocabulary fingerprints and manifest input hashes;
// not a cryptographic digest.
std::uint64_t fnv1a64(std::string_view bytes);

/// 16 lowercase hex digits of fnv1a64(bytes).
std::string fingerprint(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace mtlab
