#pragma once

// CSV output with a leading metadata comment block. Numbers are written with
// "%.10g" so files are byte-stable across runs.

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "lapdecon/errors.hpp"

#ifndef LAPDECON_VERSION
#define LAPDECON_VERSION "unknown"
#endif

namespace lapdecon {

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// One CSV cell: numbers are formatted, strings pass through.
struct Cell {
  std::string text;
  Cell(double v) : text(format_number(v)) {}
  Cell(int v) : text(std::to_string(v)) {}
  Cell(long long v) : text(std::to_string(v)) {}
  Cell(std::size_t v) : text(std::to_string(v)) {}
  Cell(bool v) : text(v ? "1" : "0") {}
  Cell(const char* s) : text(s) {}
  Cell(std::string s) : text(std::move(s)) {}
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  /// Adds "# key: value" to the metadata block.
  void meta(const std::string& key, const std::string& value) { meta_.emplace_back(key, value); }

  void row(std::initializer_list<Cell> cells) { row(std::vector<Cell>(cells)); }
  void row(const std::vector<Cell>& cells) {
    if (cells.size() != header_.size()) throw Error("csv: row width does not match header");
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += cells[i].text;
    }
    rows_.push_back(std::move(line));
  }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : meta_) out += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += "\n";
    for (const auto& r : rows_) out += r + "\n";
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    f << str();
    if (!f) throw Error("failed writing '" + path + "'");
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::string> rows_;
};

}  // namespace lapdecon
