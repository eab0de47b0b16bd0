#include "itoanova/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace itoanova::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, const std::string& where) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || cell.empty())
    fail(ErrorKind::FormatError, where + ": '" + cell + "' is not a decimal number");
  if (!std::isfinite(v)) fail(ErrorKind::FormatError, where + ": non-finite value '" + cell + "'");
  return v;
}

std::ifstream open(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::IoError, "cannot open " + file.string());
  return in;
}

// Reads header + rows; returns header names and row-major numbers per column.
std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_numeric(
    std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::FormatError, source + ": empty file");
  auto header = split(line);
  if (header.empty() || header.front() != "time")
    fail(ErrorKind::FormatError, source + ": first header column must be 'time'");
  std::vector<std::vector<double>> cols(header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      fail(ErrorKind::FormatError, source + ": line " + std::to_string(row) + " has " +
                                       std::to_string(cells.size()) + " fields, expected " +
                                       std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
      cols[c].push_back(parse_number(cells[c], source + ":" + std::to_string(row)));
  }
  return {std::move(header), std::move(cols)};
}

}  // namespace

std::string format(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

PathSeries read_paths(std::istream& in, const std::string& source) {
  auto [header, cols] = read_numeric(in, source);
  for (std::size_t i = 1; i < cols[0].size(); ++i)
    if (!(cols[0][i] > cols[0][i - 1]))
      fail(ErrorKind::NonMonotoneTime, source + ": time not strictly increasing at data row " +
                                           std::to_string(i + 1));
  SamplingGrid grid{std::span<const double>(cols[0])};
  std::vector<std::string> names(header.begin() + 1, header.end());
  std::vector<Column> columns;
  for (std::size_t c = 1; c < cols.size(); ++c)
    columns.push_back(Eigen::Map<const Column>(cols[c].data(), static_cast<Index>(cols[c].size())));
  return PathSeries(std::move(grid), std::move(names), std::move(columns));
}

PathSeries read_paths(const std::filesystem::path& file) {
  auto in = open(file);
  return read_paths(in, file.string());
}

void write_paths(std::ostream& out, const PathSeries& paths) {
  Table t;
  t.header.push_back("time");
  t.columns.push_back(paths.grid().times());
  for (std::size_t c = 0; c < paths.names().size(); ++c) {
    t.header.push_back(paths.names()[c]);
    t.columns.push_back(paths.column(c));
  }
  write_table(out, t);
}

RawSeries read_raw(std::istream& in, const std::string& source) {
  auto [header, cols] = read_numeric(in, source);
  if (header.size() != 2 || header[1] != "value")
    fail(ErrorKind::FormatError, source + ": expected header 'time,value'");
  RawSeries r{std::move(cols[0]), std::move(cols[1])};
  if (r.times.empty()) fail(ErrorKind::FormatError, source + ": no data rows");
  for (std::size_t i = 1; i < r.times.size(); ++i)
    if (!(r.times[i] > r.times[i - 1]))
      fail(ErrorKind::NonMonotoneTime, source + ": time not strictly increasing at data row " +
                                           std::to_string(i + 1));
  return r;
}

RawSeries read_raw(const std::filesystem::path& file) {
  auto in = open(file);
  return read_raw(in, file.string());
}

void write_table(std::ostream& out, const Table& table) {
  if (table.header.size() != table.columns.size())
    fail(ErrorKind::LengthMismatch, "table header and column count differ");
  for (std::size_t c = 0; c < table.header.size(); ++c) out << (c ? "," : "") << table.header[c];
  out << '\n';
  const Index rows = table.columns.empty() ? 0 : table.columns.front().size();
  for (const auto& col : table.columns)
    if (col.size() != rows) fail(ErrorKind::LengthMismatch, "table columns differ in length");
  for (Index r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      out << (c ? "," : "") << format(table.columns[c](r));
    out << '\n';
  }
}

}  // namespace itoanova::csv
