#pragma once

// Region-text similarity scoring: object embeddings against text embeddings.
// score[k][c] = sigmoid(dot(obj[k], txt[c]) / sqrt(D)). This is a declared
// stand-in for a learned fusion path; it only has to be well-defined,
// bounded in (0,1), and deterministic.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "backbone_lens/error.hpp"
#include "backbone_lens/format.hpp"

namespace backbone_lens {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c) {
    if (r < 1 || c < 1)
      throw Error("matrix dims must be positive, got " + std::to_string(r) + "x" +
                  std::to_string(c));
    data.assign(static_cast<std::size_t>(r) * c, fill);
  }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// File format: first line "K D", then K*D whitespace-separated values.
inline Matrix read_matrix(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw Error(source + ": malformed matrix header");
  std::istringstream head(header);
  int rows = 0, cols = 0;
  if (!(head >> rows >> cols) || rows < 1 || cols < 1)
    throw Error(source + ": malformed matrix header \"" + header + "\"");
  std::string trailing;
  if (head >> trailing) throw Error(source + ": malformed matrix header \"" + header + "\"");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    if (!(in >> m.data[i]))
      throw Error(source + ": expected " + std::to_string(m.data.size()) +
                  " values, got " + std::to_string(i));
  double extra;
  if (in >> extra) throw Error(source + ": trailing values after matrix data");
  return m;
}

inline Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matrix file: " + path);
  return read_matrix(in, path);
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows << ' ' << m.cols << "\n";
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) out << (c ? " " : "") << exact_double(m.at(r, c));
    out << "\n";
  }
}

inline Matrix region_text_scores(const Matrix& obj, const Matrix& txt) {
  if (obj.cols != txt.cols)
    throw Error("embedding dimension mismatch: objects have " + std::to_string(obj.cols) +
                ", texts have " + std::to_string(txt.cols));
  for (double v : obj.data)
    if (!std::isfinite(v)) throw Error("object embeddings contain a non-finite value");
  for (double v : txt.data)
    if (!std::isfinite(v)) throw Error("text embeddings contain a non-finite value");
  Matrix scores(obj.rows, txt.rows);
  const double norm = std::sqrt(static_cast<double>(obj.cols));
  for (int k = 0; k < obj.rows; ++k)
    for (int c = 0; c < txt.rows; ++c) {
      double dot = 0.0;
      for (int d = 0; d < obj.cols; ++d) dot += obj.at(k, d) * txt.at(c, d);
      scores.at(k, c) = 1.0 / (1.0 + std::exp(-dot / norm));
    }
  return scores;
}

}  // namespace backbone_lens
