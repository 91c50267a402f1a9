#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ragforge {

/// FNV-1a, 64-bit. Stable across platforms; used for manifests, request
/// keys and seed derivation, not for security.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex64(std::uint64_t value);

/// Hex digest of a whole file's bytes. Throws Error(IoError) if unreadable.
std::string hash_file(const std::filesystem::path& path);

inline std::string hash_string(std::string_view data) {
    return to_hex64(fnv1a64(data));
}

} // namespace ragforge
