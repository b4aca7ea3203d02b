#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace specloop {

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers see either the old file, nothing, or the complete new file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace specloop
