#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace kenn {

// Writes to a sibling temp file and renames it over `path`, so readers never
// see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace kenn
