#include "csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace recidx {

namespace {

[[noreturn]] void csv_fail(const std::string& path, std::size_t line, std::size_t column,
                           const std::string& what) {
  fail(Err::CsvError, path + ":" + std::to_string(line) + ": column " +
                          std::to_string(column) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string fmt_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

bool id_marks_hard(const std::string& id) {
  return !id.empty() && id.front() == 'c' && id.find("_h") != std::string::npos;
}

void write_embedding_csv(const std::string& path, const std::vector<CsvRecord>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open '" + path + "' for writing");
  const std::size_t dim = rows.empty() ? 0 : rows.front().x.size();
  out << "id,label";
  for (std::size_t k = 0; k < dim; ++k) out << ",x" << k;
  out << "\n";
  for (const CsvRecord& row : rows) {
    if (row.x.size() != dim) {
      fail(Err::DimensionMismatch, "write_embedding_csv: row '" + row.id + "' has dim " +
                                       std::to_string(row.x.size()) + ", expected " +
                                       std::to_string(dim));
    }
    out << row.id << ',' << row.label;
    for (double v : row.x) out << ',' << fmt_g17(v);
    out << "\n";
  }
  out.flush();
  if (!out) fail(Err::IoError, "write failed for '" + path + "'");
}

std::vector<CsvRecord> read_embedding_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) csv_fail(path, 1, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    csv_fail(path, 1, 1, "header must start with 'id,label,x0,...'");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k + 2] != "x" + std::to_string(k)) {
      csv_fail(path, 1, k + 3, "expected header field 'x" + std::to_string(k) + "', got '" +
                                   header[k + 2] + "'");
    }
  }

  std::vector<CsvRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != dim + 2) {
      csv_fail(path, line_no, fields.size(),
               "expected " + std::to_string(dim + 2) + " fields, got " +
                   std::to_string(fields.size()));
    }
    CsvRecord row;
    row.id = fields[0];
    if (row.id.empty()) csv_fail(path, line_no, 1, "empty id");

    errno = 0;
    char* end = nullptr;
    const long label = std::strtol(fields[1].c_str(), &end, 10);
    if (fields[1].empty() || *end != '\0' || errno == ERANGE) {
      csv_fail(path, line_no, 2, "label '" + fields[1] + "' is not an integer");
    }
    row.label = static_cast<int>(label);

    row.x.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const std::string& field = fields[k + 2];
      errno = 0;
      end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || *end != '\0') {
        csv_fail(path, line_no, k + 3, "value '" + field + "' is not a float");
      }
      if (!std::isfinite(v)) {
        csv_fail(path, line_no, k + 3, "value '" + field + "' is not finite");
      }
      row.x[k] = v;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace recidx
