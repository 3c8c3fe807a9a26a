#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace helix {

// Hex-encoded SHA-256.
std::string sha256_hex(std::span<const uint8_t> data);
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace helix
