#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace aerobroker::io {

/// Whole-file read; returns an empty string when the file does not exist.
std::string read_file(const std::filesystem::path& path);

/// Appends bytes and syncs them to disk before returning.
void append_durable(const std::filesystem::path& path, std::string_view bytes);

/// Truncates to `size` bytes and syncs.
void truncate_durable(const std::filesystem::path& path, std::uintmax_t size);

void write_file(const std::filesystem::path& path, std::string_view bytes);

void put_u32_be(std::string& out, std::uint32_t v);
std::uint32_t get_u32_be(std::string_view bytes);

}  // namespace aerobroker::io
