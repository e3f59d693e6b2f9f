#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "frog/errors.hpp"

namespace frog {

/// Format a double with 17 significant digits so the text round-trips to
/// the exact same bits.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_bool(bool v) { return v ? "true" : "false"; }

/// Minimal CSV writer: snake_case headers, one header line, plain fields
/// (no quoting; field values must not contain commas or newlines).
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path) {
    require(out_.is_open(), errc::io_error, "cannot open " + path + " for writing");
  }

  void header(const std::vector<std::string>& names) {
    columns_ = names.size();
    write_line(names);
  }

  void row(const std::vector<std::string>& fields) {
    require(fields.size() == columns_, errc::io_error,
            "row width " + std::to_string(fields.size()) + " does not match header width " +
                std::to_string(columns_) + " in " + path_);
    write_line(fields);
  }

  void flush() {
    out_.flush();
    require(static_cast<bool>(out_), errc::io_error, "failed writing " + path_);
  }

 private:
  void write_line(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
};

/// Parsed CSV: header plus rows of fields, for round-trip checks and tests.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    raise(errc::io_error, "missing CSV column '" + name + "'");
  }

  const std::string& at(std::size_t row, const std::string& name) const {
    return rows.at(row).at(column(name));
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.is_open(), errc::io_error, "cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (first) {
      table.header = fields;
      first = false;
    } else {
      table.rows.push_back(fields);
    }
  }
  return table;
}

}  // namespace frog
