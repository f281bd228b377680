#pragma once

// Matrix Market reader/writer. Writes the array format with 17 significant
// digits so a save/load cycle reproduces every double exactly.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slra/core.hpp"
#include "slra/error.hpp"

namespace slra {

/// Largest matrix the reader will allocate (entries).
inline constexpr std::uint64_t kMaxMatrixEntries = std::uint64_t{1} << 31;

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

inline double parse_value(const std::string& token, std::size_t line) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError(line, "bad numeric value '" + token + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite value '" + token + "'");
  return v;
}

inline std::string format_value(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

}  // namespace detail

inline DenseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw ParseError(1, "empty input, expected %%MatrixMarket header");
  ++lineno;
  std::istringstream header(detail::lower(line));
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%matrixmarket" || object != "matrix")
    throw ParseError(lineno, "expected '%%MatrixMarket matrix ...' header");
  if (format != "array" && format != "coordinate")
    throw ParseError(lineno, "unsupported format '" + format + "'");
  if (field != "real" && field != "double" && field != "integer")
    throw ParseError(lineno, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(lineno, "unsupported symmetry '" + symmetry + "'");
  const bool coordinate = format == "coordinate";
  const bool symmetric = symmetry == "symmetric";

  // Size line, after comments.
  do {
    if (!std::getline(in, line)) throw ParseError(lineno + 1, "missing size line");
    ++lineno;
  } while (!line.empty() && (line[0] == '%' || detail::blank(line)));

  std::istringstream size_line(line);
  long long rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols;
  if (coordinate) size_line >> nnz;
  if (!size_line || rows <= 0 || cols <= 0 || nnz < 0)
    throw ParseError(lineno, "bad size line '" + line + "'");
  if (static_cast<std::uint64_t>(rows) > kMaxMatrixEntries / static_cast<std::uint64_t>(cols))
    throw DimensionError("matrix market: dimension overflow (" + std::to_string(rows) + " x " +
                         std::to_string(cols) + ")");
  if (symmetric && rows != cols) throw ParseError(lineno, "symmetric matrix must be square");

  DenseMatrix m = DenseMatrix::Zero(rows, cols);
  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line[0] == '%') continue;
      if (detail::blank(line)) continue;
      return true;
    }
    return false;
  };

  if (coordinate) {
    for (long long e = 0; e < nnz; ++e) {
      if (!next_data_line()) throw ParseError(lineno + 1, "unexpected end of file in entries");
      std::istringstream ls(line);
      long long i = 0, j = 0;
      std::string value;
      ls >> i >> j >> value;
      if (!ls && value.empty()) throw ParseError(lineno, "bad coordinate entry '" + line + "'");
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw ParseError(lineno, "entry index out of range");
      const double v = detail::parse_value(value, lineno);
      m(i - 1, j - 1) = v;
      if (symmetric) m(j - 1, i - 1) = v;
    }
  } else {
    // Column-major; symmetric arrays list only the lower triangle.
    for (long long j = 0; j < cols; ++j) {
      for (long long i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line()) throw ParseError(lineno + 1, "unexpected end of file in entries");
        std::istringstream ls(line);
        std::string value;
        ls >> value;
        const double v = detail::parse_value(value, lineno);
        m(i, j) = v;
        if (symmetric) m(j, i) = v;
      }
    }
  }
  return m;
}

inline void write_matrix_market(std::ostream& out, const DenseMatrix& m) {
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) out << detail::format_value(m(i, j)) << '\n';
}

inline DenseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_matrix_market(in);
}

inline void save_matrix(const DenseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_matrix_market(out, m);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Embeds M in the top-left corner of a zero matrix of the given size.
inline DenseMatrix pad_matrix(const DenseMatrix& m, Index rows, Index cols) {
  if (rows < m.rows() || cols < m.cols())
    throw DimensionError("pad_matrix: target " + std::to_string(rows) + " x " +
                         std::to_string(cols) + " is smaller than the input");
  DenseMatrix out = DenseMatrix::Zero(rows, cols);
  out.topLeftCorner(m.rows(), m.cols()) = m;
  return out;
}

}  // namespace slra
