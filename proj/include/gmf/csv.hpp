#pragma once

#include "gmf/common.hpp"

#include <string>
#include <vector>

namespace gmf {

//! Reals are written with 17 significant digits, which round-trips doubles.
std::string format_real(double v);

//! RFC 4180 table with a header row.
class CsvTable
{
public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  void add_row(std::span<const double> values);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;

  std::string to_string() const;
  void write(const std::string& path) const;

  //! Parse errors name the line and column.
  static CsvTable parse(const std::string& text, const std::string& source = "<memory>");
  static CsvTable read(const std::string& path);

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

} // namespace gmf
