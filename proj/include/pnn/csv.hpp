#pragma once

#include <concepts>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pnn/errors.hpp"

namespace pnn {

// 17 significant digits: enough for doubles to round-trip exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {
inline std::string csv_field(const std::string& v) { return v; }
inline std::string csv_field(const char* v) { return v; }
inline std::string csv_field(double v) { return format_double(v); }
template <typename T>
  requires std::integral<T>
std::string csv_field(T v) {
  return std::to_string(v);
}
}  // namespace detail

// UTF-8 CSV with a header row; fields never need quoting here.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    write_raw(header);
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    std::vector<std::string> cells;
    cells.reserve(sizeof...(fields));
    (cells.push_back(detail::csv_field(fields)), ...);
    write_raw(cells);
  }

  void row_cells(const std::vector<std::string>& cells) { write_raw(cells); }

 private:
  void write_raw(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
};

}  // namespace pnn
