#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mdts {

// Writes to a sibling temp file, then renames over `path`. Throws
// Error(kIoFailure) on any failure.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);

// Throws Error(kMissingFile) if absent, Error(kIoFailure) if unreadable.
std::string ReadFile(const std::filesystem::path& path);

// Shortest decimal string that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace mdts
