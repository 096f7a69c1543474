#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace backbone_lens {

// One-decimal fixed formatting, truncating toward zero. YOLO-family result
// tables are internally consistent under this convention (e.g. an F1 of
// 33.9615 prints as 33.9), so the whole toolkit reports percentages this way.
// The 1e-6 guard keeps values a few ulps below a representable tenth (a
// telescoped recall sum of 0.99999999999999989, say) from dropping a digit.
inline std::string fixed1_trunc(double value) {
  const bool neg = value < 0.0;
  const double tenths_real = std::abs(value) * 10.0 + 1e-6;
  const long long tenths = static_cast<long long>(std::floor(tenths_real));
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s%lld.%lld", (neg && tenths != 0) ? "-" : "",
                tenths / 10, tenths % 10);
  return buf;
}

// fraction in [0,1] -> "41.6"
inline std::string percent1(double fraction) { return fixed1_trunc(fraction * 100.0); }

namespace detail {

inline std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

inline std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

// Aligned plain-text table: columns before `right_from` are left-aligned,
// the rest right-aligned; trailing spaces trimmed per line.
inline std::string render_columns(const std::vector<std::vector<std::string>>& rows,
                                  std::size_t right_from) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (widths.size() <= c) widths.resize(c + 1, 0);
      widths[c] = std::max(widths[c], row[c].size());
    }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += c >= right_from ? pad_left(row[c], widths[c]) : pad_right(row[c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace detail

// Shortest exact decimal round-trip for a double (tensor files, CSV points).
inline std::string exact_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  // %.17g always round-trips; prefer the shorter form when it also does.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, value);
    if (std::strtod(shorter, nullptr) == value) return shorter;
  }
  return buf;
}

}  // namespace backbone_lens
