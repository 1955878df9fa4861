#pragma once

// Report files: atomic writes and fingerprinted names.

#include <filesystem>
#include <string>

namespace conetest {

/// Writes content to a temporary sibling and renames it over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// "<experiment>-<first 16 hex digits of the fingerprint>.<ext>"
std::string report_filename(const std::string& experiment, const std::string& fingerprint, const std::string& ext);

}  // namespace conetest
