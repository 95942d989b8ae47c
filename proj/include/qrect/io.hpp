#pragma once

#include <filesystem>
#include <string_view>

namespace qrect {

/// Writes `content` to a temporary sibling of `path` and renames it into
/// place, so readers never see a partial file. Throws std::runtime_error.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace qrect
