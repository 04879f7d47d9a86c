#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mobgap {

// Minimal zip container support: stored and deflate entries, no zip64, no
// encryption. Entry names are returned as stored in the archive.
std::map<std::string, std::string> read_zip(std::string_view bytes);

// Writes stored (uncompressed) entries in the given order.
std::string write_zip(
    std::vector<std::pair<std::string, std::string>> const& entries);

bool is_zip(std::string_view bytes);
bool is_gzip(std::string_view bytes);
std::string gunzip(std::string_view bytes);
std::string gzip(std::string_view bytes);

}  // namespace mobgap
