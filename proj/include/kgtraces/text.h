#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kgtraces {

std::string trim(std::string_view s);

// NFC, lowercase, whitespace runs collapsed to one space, trimmed.
// The single normalization shared by entity resolution and answer matching.
std::string normalize_surface(std::string_view s);

std::vector<std::string> split_lines(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_icase(std::string_view s, std::string_view prefix);

// Stable 64-bit FNV-1a; used for fixture keys and per-item seed derivation.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames it into place.
std::size_t write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace kgtraces
