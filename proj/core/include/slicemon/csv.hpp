#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace slicemon {

// Numbers are printed through one formatter so files are byte-stable run to
// run (%.12g keeps ratios readable without dumping 17-digit noise).
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& cols) { line(cols); }

  template <typename... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    (emit(vals, first), ...);
    out_ << '\n';
  }

  void line(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  template <typename T>
  void emit(const T& v, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      out_ << fmt_num(v);
    } else {
      out_ << v;
    }
  }
  std::ostream& out_;
};

}  // namespace slicemon
