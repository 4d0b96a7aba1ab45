#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace amulap::io {

// Throws ErrorKind::path when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

// Writes to "<path>.tmp" then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace amulap::io
