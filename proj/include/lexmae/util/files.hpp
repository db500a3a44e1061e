#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lexmae::util {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Throws pipeline_order_error naming `what` when `path` does not exist.
void require_artifact(const std::filesystem::path& path, const std::string& what, const std::string& produced_by);

}  // namespace lexmae::util
