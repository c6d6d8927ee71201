#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Tab-separated tables with a mandatory header row.
//
// Field escaping: backslash, tab, newline and carriage return are written as
// "\\", "\t", "\n" and "\r". Lines beginning with '#' are comments (used for
// the reproducibility header) and are skipped on read; a leading "#" in the
// first field is written as "\#".
namespace cxrlabel::tsv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  /// Throws Error{input, "tsv", "missing-column"}.
  std::size_t require_column(std::string_view name) const;
};

std::string escape(std::string_view field);
std::string unescape(std::string_view field);

Table parse(std::string_view text, const std::string& source = "<memory>");
Table read(const std::filesystem::path& path);

/// Serializes with optional leading comment lines (each emitted as "# ...").
std::string format(const Table& table,
                   const std::vector<std::string>& comments = {});
void write(const std::filesystem::path& path, const Table& table,
           const std::vector<std::string>& comments = {});

// Shared helpers for plain file I/O with input-category errors.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace cxrlabel::tsv
