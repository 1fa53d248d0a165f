#pragma once

#include <filesystem>
#include <string>

namespace compindex {

/// Hex-encoded SHA-256 digest.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

} // namespace compindex
