#include "webzsl/matrix_io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "webzsl/corpus.hpp"

namespace webzsl {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m(i, j);
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  long long rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) throw Error("bad matrix header");
  Eigen::MatrixXd m(rows, cols);
  for (long long i = 0; i < rows; ++i)
    for (long long j = 0; j < cols; ++j)
      if (!(in >> m(i, j)))
        throw Error("matrix data ends early at row " + std::to_string(i) + ", column " +
                    std::to_string(j));
  std::string extra;
  if (in >> extra) throw Error("matrix has trailing data after " + std::to_string(rows) + " rows");
  return m;
}

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write matrix: " + path.string());
  write_matrix(out, m);
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read matrix: " + path.string());
  try {
    return read_matrix(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> load_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace webzsl
