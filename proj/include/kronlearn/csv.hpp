#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kronlearn/common.hpp"
#include "kronlearn/matrix.hpp"

namespace kronlearn {

// Doubles print with 17 significant digits so every value round-trips.
inline std::string csv_cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline std::string csv_cell(std::size_t v) { return std::to_string(v); }
inline std::string csv_cell(int v) { return std::to_string(v); }

inline std::string csv_cell_hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Fixed-width CSV table: header decided up front, rows appended, LF line
// endings, no quoting (cells must not contain separators).
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
    detail::require(!header_.empty(), "CsvWriter: empty header");
    for (const std::string& h : header_) check_cell(h);
  }

  void add_row(std::vector<std::string> cells) {
    detail::require(cells.size() == header_.size(),
                    "CsvWriter: row width does not match header");
    for (const std::string& c : cells) check_cell(c);
    rows_.push_back(std::move(cells));
  }

  std::size_t row_count() const { return rows_.size(); }

  std::string str() const {
    std::string out = join(header_);
    for (const std::vector<std::string>& row : rows_) out += join(row);
    return out;
  }

  void write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("CsvWriter: cannot open " + path);
    const std::string body = str();
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw std::runtime_error("CsvWriter: write failed for " + path);
  }

 private:
  static void check_cell(const std::string& c) {
    if (c.find_first_of(",\n\r") != std::string::npos)
      throw dimension_error("CsvWriter: cell contains a separator character");
  }

  static std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) line += ',';
      line += cells[i];
    }
    line += '\n';
    return line;
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace kronlearn
