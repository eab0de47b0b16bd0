#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "itoanova/series.hpp"

namespace itoanova::csv {

/// Shortest decimal text that round-trips to the same double.
std::string format(double value);

/// `time,<name1>,<name2>,...` with strictly increasing time starting at 0.
PathSeries read_paths(std::istream& in, const std::string& source = "<stream>");
PathSeries read_paths(const std::filesystem::path& file);
void write_paths(std::ostream& out, const PathSeries& paths);

/// `time,value`; times need only be strictly increasing.
RawSeries read_raw(std::istream& in, const std::string& source = "<stream>");
RawSeries read_raw(const std::filesystem::path& file);

/// Header plus equally long numeric columns.
struct Table {
  std::vector<std::string> header;
  std::vector<Column> columns;
};

void write_table(std::ostream& out, const Table& table);

}  // namespace itoanova::csv
