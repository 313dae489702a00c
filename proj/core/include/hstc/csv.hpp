#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hstc::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line of each row, for error messages.
    std::vector<std::size_t> lines;

    [[nodiscard]] std::size_t column(std::string_view name) const;
};

/// Reads a UTF-8 CSV with a header row. Handles double-quoted fields and
/// CRLF; blank lines are skipped. Throws DataError on ragged rows.
[[nodiscard]] Table read(const std::filesystem::path& path);
[[nodiscard]] Table parse(std::string_view text, std::string_view source = "<memory>");

[[nodiscard]] std::vector<std::string> split_line(std::string_view line);

/// Shortest decimal string that round-trips to the same double.
[[nodiscard]] std::string format_double(double value);

[[nodiscard]] double parse_double(std::string_view text);

}  // namespace hstc::csv
