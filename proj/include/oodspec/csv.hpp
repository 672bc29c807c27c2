#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oodspec::csv {

// Minimal RFC-4180-style CSV support: quoted fields, embedded commas/quotes,
// both \n and \r\n line endings. Good enough for the tabular formats this
// project reads and writes; no embedded-newline support on input rows.

std::vector<std::string> split_line(const std::string& line);

// Quote a field only when it needs quoting.
std::string escape_field(const std::string& field);

std::string join_row(const std::vector<std::string>& fields);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name, -1 if absent.
    int column(const std::string& name) const;
};

// Reads the whole file; throws errc::io_error / errc::empty_file.
Table read_file(const std::string& path);

void write_file(const std::string& path, const Table& table);

}  // namespace oodspec::csv
