#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace mdslab {

/// Header plus rows of text fields. Reals are stored already formatted by
/// format_real so that writing and re-reading loses nothing.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string &name) const; // throws DomainError
  double real_at(std::size_t row, const std::string &name) const;
};

/// Fields containing ',', '"' or a line break are quoted, '"' doubled.
void write_csv(std::ostream &os, const CsvTable &table);
CsvTable read_csv(std::istream &is);

void write_csv_file(const std::string &path, const CsvTable &table);
CsvTable read_csv_file(const std::string &path);

/// Strict parse of a whole field as a real ("inf", "nan" accepted).
double parse_real_field(const std::string &field);

} // namespace mdslab
