#include "ismd/mmio.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ismd {

namespace {

struct Banner {
  bool coordinate = false;
  bool symmetric = false;
  bool pattern = false;
  bool integer = false;
};

Banner parse_banner(const std::string& line, const std::string& path) {
  std::istringstream ss(line);
  std::string tag, object, format, field, sym;
  ss >> tag >> object >> format >> field >> sym;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  if (tag != "%%MatrixMarket" || lower(object) != "matrix")
    throw Error(ErrorCode::io, path + ": not a Matrix Market file");
  Banner b;
  const std::string f = lower(format), fld = lower(field), s = lower(sym);
  if (f == "coordinate")
    b.coordinate = true;
  else if (f != "array")
    throw Error(ErrorCode::io, path + ": unsupported format " + format);
  if (fld == "pattern")
    b.pattern = true;
  else if (fld == "integer")
    b.integer = true;
  else if (fld != "real")
    throw Error(ErrorCode::io, path + ": unsupported field " + field);
  if (s == "symmetric")
    b.symmetric = true;
  else if (s != "general")
    throw Error(ErrorCode::io, path + ": unsupported symmetry " + sym);
  return b;
}

}  // namespace

void write_matrix_market(const std::string& path, const Matrix& m, bool symmetric) {
  if (symmetric && m.rows() != m.cols())
    throw Error(ErrorCode::invalid_argument, "write_matrix_market: symmetric needs square");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::io, "cannot open for writing: " + path);

  Index nnz = 0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = symmetric ? j : 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) ++nnz;
  const Index stored = symmetric ? m.rows() * (m.rows() + 1) / 2 : m.size();
  const bool coordinate = stored > 0 && nnz * 2 < stored;

  if (coordinate) {
    std::fprintf(f, "%%%%MatrixMarket matrix coordinate real %s\n",
                 symmetric ? "symmetric" : "general");
    std::fprintf(f, "%" PRId64 " %" PRId64 " %" PRId64 "\n",
                 static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols()),
                 static_cast<std::int64_t>(nnz));
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = symmetric ? j : 0; i < m.rows(); ++i)
        if (m(i, j) != 0.0)
          std::fprintf(f, "%" PRId64 " %" PRId64 " %.17g\n",
                       static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(j + 1),
                       m(i, j));
  } else {
    std::fprintf(f, "%%%%MatrixMarket matrix array real %s\n",
                 symmetric ? "symmetric" : "general");
    std::fprintf(f, "%" PRId64 " %" PRId64 "\n", static_cast<std::int64_t>(m.rows()),
                 static_cast<std::int64_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = symmetric ? j : 0; i < m.rows(); ++i)
        std::fprintf(f, "%.17g\n", m(i, j));
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::io, "write failed: " + path);
}

Matrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::io, path + ": empty file");
  const Banner b = parse_banner(line, path);

  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      if (out.empty() || out[0] == '%') continue;
      return true;
    }
    return false;
  };
  if (!next_data_line(line)) throw Error(ErrorCode::io, path + ": missing size line");

  std::istringstream size_ss(line);
  Index rows = 0, cols = 0, nnz = 0;
  size_ss >> rows >> cols;
  if (b.coordinate) size_ss >> nnz;
  if (rows < 0 || cols < 0 || size_ss.fail())
    throw Error(ErrorCode::io, path + ": bad size line");

  Matrix m = Matrix::Zero(rows, cols);
  if (b.coordinate) {
    for (Index k = 0; k < nnz; ++k) {
      if (!next_data_line(line)) throw Error(ErrorCode::io, path + ": truncated data");
      std::istringstream ss(line);
      Index i = 0, j = 0;
      double v = 1.0;
      ss >> i >> j;
      if (!b.pattern) ss >> v;
      if (ss.fail() || i < 1 || i > rows || j < 1 || j > cols)
        throw Error(ErrorCode::io, path + ": bad coordinate entry");
      m(i - 1, j - 1) = v;
      if (b.symmetric) m(j - 1, i - 1) = v;
    }
  } else {
    for (Index j = 0; j < cols; ++j) {
      const Index i0 = b.symmetric ? j : 0;
      for (Index i = i0; i < rows; ++i) {
        if (!next_data_line(line)) throw Error(ErrorCode::io, path + ": truncated data");
        std::istringstream ss(line);
        double v = 0.0;
        ss >> v;
        if (ss.fail()) throw Error(ErrorCode::io, path + ": bad array entry");
        m(i, j) = v;
        if (b.symmetric) m(j, i) = v;
      }
    }
  }
  return m;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot open for writing: " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ismd
