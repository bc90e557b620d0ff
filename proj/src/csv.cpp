#include "mdslab/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "mdslab/errors.hpp"

namespace mdslab {

std::size_t CsvTable::column(const std::string &name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name)
      return i;
  throw DomainError("csv: no column named '" + name + "'");
}

double CsvTable::real_at(std::size_t row, const std::string &name) const {
  return parse_real_field(rows.at(row).at(column(name)));
}

namespace {

void write_field(std::ostream &os, const std::string &f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    os << f;
    return;
  }
  os << '"';
  for (char c : f) {
    if (c == '"')
      os << '"';
    os << c;
  }
  os << '"';
}

void write_row(std::ostream &os, const std::vector<std::string> &row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i)
      os << ',';
    write_field(os, row[i]);
  }
  os << '\n';
}

// One record; false at end of input.
bool read_record(std::istream &is, std::vector<std::string> &out) {
  out.clear();
  int c = is.get();
  if (c == EOF)
    return false;
  std::string field;
  bool quoted = false;
  for (;; c = is.get()) {
    if (quoted) {
      if (c == EOF)
        throw DomainError("csv: unterminated quoted field");
      if (c == '"') {
        if (is.peek() == '"') {
          field += '"';
          is.get();
        } else {
          quoted = false;
        }
      } else {
        field += static_cast<char>(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == EOF) {
      out.push_back(std::move(field));
      return true;
    } else if (c == '\r' && is.peek() == '\n') {
      // CRLF
    } else {
      field += static_cast<char>(c);
    }
  }
}

} // namespace

void write_csv(std::ostream &os, const CsvTable &table) {
  write_row(os, table.header);
  for (const auto &row : table.rows) {
    if (row.size() != table.header.size())
      throw DomainError("csv: row width differs from header");
    write_row(os, row);
  }
}

CsvTable read_csv(std::istream &is) {
  CsvTable t;
  if (!read_record(is, t.header))
    throw DomainError("csv: empty input");
  std::vector<std::string> rec;
  while (read_record(is, rec)) {
    if (rec.size() != t.header.size())
      throw DomainError("csv: row " + std::to_string(t.rows.size() + 1) + " has " +
                        std::to_string(rec.size()) + " fields, header has " +
                        std::to_string(t.header.size()));
    t.rows.push_back(rec);
  }
  return t;
}

void write_csv_file(const std::string &path, const CsvTable &table) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(os, table);
  if (!os)
    throw std::runtime_error("write to '" + path + "' failed");
}

CsvTable read_csv_file(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw DomainError("cannot open '" + path + "'");
  return read_csv(is);
}

double parse_real_field(const std::string &field) {
  if (field.empty())
    throw DomainError("csv: empty numeric field");
  errno = 0;
  char *end = nullptr;
  const double x = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || (errno == ERANGE && std::abs(x) == HUGE_VAL))
    throw DomainError("csv: '" + field + "' is not a real");
  return x;
}

} // namespace mdslab
