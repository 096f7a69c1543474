#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "backbone_lens/error.hpp"
#include "backbone_lens/format.hpp"

namespace backbone_lens {

struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }

  bool operator==(const Shape&) const = default;
};

// Dense 4-D NCHW tensor, 64-bit values, row-major.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(const Shape& s, double fill = 0.0)
      : shape(s), data(static_cast<std::size_t>(s.numel()), fill) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
      throw Error("tensor shape components must be >= 1, got " + s.str());
  }

  std::int64_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::int64_t>(n) * shape.c + c) * shape.h + y) * shape.w + x;
  }
  double at(int n, int c, int y, int x) const { return data[index(n, c, y, x)]; }
  double& at(int n, int c, int y, int x) { return data[index(n, c, y, x)]; }

  bool operator==(const Tensor&) const = default;
};

// --- tensor file format: "N C H W\n" then N*C*H*W whitespace-separated values.

inline void write_tensor(std::ostream& out, const Tensor& t) {
  out << t.shape.n << " " << t.shape.c << " " << t.shape.h << " " << t.shape.w << "\n";
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    out << exact_double(t.data[i]);
    out << (((i + 1) % 16 == 0 || i + 1 == t.data.size()) ? "\n" : " ");
  }
}

inline Tensor read_tensor(std::istream& in, const std::string& source = "<stream>") {
  Shape s;
  if (!(in >> s.n >> s.c >> s.h >> s.w))
    throw Error(source + ": malformed tensor header, expected \"N C H W\"");
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
    throw Error(source + ": tensor shape components must be >= 1, got " + s.str());
  Tensor t(s);
  for (std::int64_t i = 0; i < s.numel(); ++i) {
    if (!(in >> t.data[static_cast<std::size_t>(i)]))
      throw Error(source + ": expected " + std::to_string(s.numel()) +
                  " values, got " + std::to_string(i));
  }
  return t;
}

inline Tensor read_tensor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tensor file: " + path);
  return read_tensor(in, path);
}

inline void write_tensor_file(const std::string& path, const Tensor& t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write tensor file: " + path);
  write_tensor(out, t);
}

}  // namespace backbone_lens
