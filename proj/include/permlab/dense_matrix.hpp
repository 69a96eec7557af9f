#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "permlab/distribution.hpp"
#include "permlab/errors.hpp"

namespace permlab {

/// Square matrix of finite nonnegative reals, row-major.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) { check_entry(fill); }

  DenseMatrix(std::size_t n, std::vector<double> entries) : n_(n), a_(std::move(entries)) {
    if (a_.size() != n * n) throw ShapeError("DenseMatrix: entry count is not n*n");
    for (double v : a_) check_entry(v);
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
    return m;
  }

  std::size_t n() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double v) {
    check_entry(v);
    a_[i * n_ + j] = v;
  }

  std::span<const double> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }
  std::span<const double> entries() const { return a_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  static void check_entry(double v) {
    if (!std::isfinite(v) || v < 0) throw ArgumentError("DenseMatrix: entries must be finite and >= 0");
  }

  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Reads one row per line, whitespace-separated decimals. Blank lines are
/// ignored.
inline DenseMatrix parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
      if (pos == line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
      double v = detail::parse_real(line.substr(pos, end - pos), "matrix line " + std::to_string(line_no));
      if (v < 0 || !std::isfinite(v))
        throw ParseError("matrix line " + std::to_string(line_no) + ": entries must be finite and >= 0");
      row.push_back(v);
      pos = end;
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ShapeError("matrix: no rows");
  const std::size_t n = rows.size();
  std::vector<double> flat;
  flat.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw ShapeError("matrix: row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                       " entries, expected " + std::to_string(n));
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return DenseMatrix(n, std::move(flat));
}

/// Writes rows with 17 significant digits so parse_matrix round-trips exactly.
inline std::string write_matrix(const DenseMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.n(); ++i) {
    for (std::size_t j = 0; j < m.n(); ++j) {
      if (j) out += ' ';
      out += detail::format_g17(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline DenseMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matrix(ss.str());
}

}  // namespace permlab
