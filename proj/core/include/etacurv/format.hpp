#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace etacurv {

/// Fixed 17-significant-digit rendering used by every artifact writer, so
/// identical inputs produce byte-identical files.
[[nodiscard]] std::string format_double(double v);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace etacurv
