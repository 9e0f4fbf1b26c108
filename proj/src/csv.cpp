#include "gmf/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gmf {

std::string format_real(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header)
  : header_(std::move(header))
{
}

void CsvTable::add_row(std::vector<std::string> cells)
{
  if (!header_.empty() && cells.size() != header_.size())
    throw ShapeError("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                     std::to_string(header_.size()));
  rows_.push_back(std::move(cells));
}

void CsvTable::add_row(std::span<const double> values)
{
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values)
    cells.push_back(format_real(v));
  add_row(std::move(cells));
}

std::size_t CsvTable::column(const std::string& name) const
{
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name)
      return i;
  throw ShapeError("csv has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const
{
  const auto& cell = rows_.at(row).at(col);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE)
    throw ConfigError("csv line " + std::to_string(row + 2) + ", column " + std::to_string(col + 1) +
                      ": '" + cell + "' is not a number");
  return v;
}

namespace {

void put_cell(std::ostream& os, const std::string& cell)
{
  if (cell.find_first_of(",\"\r\n") == std::string::npos) {
    os << cell;
    return;
  }
  os << '"';
  for (char c : cell) {
    if (c == '"')
      os << '"';
    os << c;
  }
  os << '"';
}

void put_row(std::ostream& os, const std::vector<std::string>& row)
{
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i)
      os << ',';
    put_cell(os, row[i]);
  }
  os << "\r\n";
}

} // namespace

std::string CsvTable::to_string() const
{
  std::ostringstream os;
  put_row(os, header_);
  for (const auto& r : rows_)
    put_row(os, r);
  return os.str();
}

void CsvTable::write(const std::string& path) const
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << to_string();
  if (!out)
    throw IoError("failed writing '" + path + "'");
}

CsvTable CsvTable::parse(const std::string& text, const std::string& source)
{
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false;
  bool cell_started = false;
  std::size_t line = 1, col = 1;
  std::size_t quote_line = 0, quote_col = 0;

  auto fail = [&](const std::string& what) {
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  };
  auto end_record = [&] {
    record.push_back(std::move(cell));
    cell.clear();
    records.push_back(std::move(record));
    record.clear();
    cell_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
          ++col;
        } else {
          quoted = false;
          if (i + 1 < text.size() && text[i + 1] != ',' && text[i + 1] != '\r' && text[i + 1] != '\n') {
            ++col;
            fail("unexpected character after closing quote");
          }
        }
      } else {
        cell.push_back(c);
        if (c == '\n') {
          ++line;
          col = 0;
        }
      }
    } else if (c == '"') {
      if (cell_started && !cell.empty())
        fail("quote inside an unquoted cell");
      quoted = true;
      cell_started = true;
      quote_line = line;
      quote_col = col;
    } else if (c == ',') {
      record.push_back(std::move(cell));
      cell.clear();
      cell_started = false;
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n')
        continue;
      end_record();
      ++line;
      col = 0;
    } else if (c == '\n') {
      end_record();
      ++line;
      col = 0;
    } else {
      cell.push_back(c);
      cell_started = true;
    }
    ++col;
  }
  if (quoted) {
    line = quote_line;
    col = quote_col;
    fail("unterminated quoted cell");
  }
  if (cell_started || !record.empty())
    end_record();

  if (records.empty())
    throw ConfigError(source + ": empty csv (no header row)");
  CsvTable table(std::move(records.front()));
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header_.size()) {
      line = r + 1;
      col = 1;
      fail("expected " + std::to_string(table.header_.size()) + " cells, found " +
           std::to_string(records[r].size()));
    }
    table.rows_.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable CsvTable::read(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

} // namespace gmf
