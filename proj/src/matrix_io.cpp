#include "ilse/matrix_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ilse {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

Matrix read_matrix(std::istream& in) {
  long long rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0)
    throw Error(ErrorCode::Io, "matrix header must be 'rows cols' with nonnegative integers");
  Matrix M(rows, cols);
  // operator>> rejects "nan"/"inf"; read tokens and parse them with strtod.
  std::string tok;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> tok)) throw Error(ErrorCode::Io, "matrix file ends early");
      char* end = nullptr;
      M(i, j) = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw Error(ErrorCode::Io, "bad matrix entry '" + tok + "'");
    }
  if (in >> tok) throw Error(ErrorCode::Io, "trailing data after matrix entries");
  return M;
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in = open_in(path);
  try {
    return read_matrix(in);
  } catch (const Error& e) {
    throw Error(ErrorCode::Io, path + ": " + e.what());
  }
}

void write_matrix(std::ostream& out, const Eigen::Ref<const Matrix>& M) {
  out << M.rows() << ' ' << M.cols() << '\n';
  char buf[32];
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

void write_matrix_file(const std::string& path, const Eigen::Ref<const Matrix>& M) {
  std::ofstream out = open_out(path);
  write_matrix(out, M);
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

Vector read_vector_file(const std::string& path) {
  const Matrix M = read_matrix_file(path);
  if (M.cols() != 1) throw Error(ErrorCode::Io, path + ": a vector file must have one column");
  return M.col(0);
}

void write_vector_file(const std::string& path, const Eigen::Ref<const Vector>& v) {
  write_matrix_file(path, Matrix(v));
}

IlseProblem load_problem(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::ifstream sig = open_in((root / "sig").string());
  long long p = -1, q = -1;
  if (!(sig >> p >> q) || p < 0 || q < 0) throw Error(ErrorCode::Io, dir + "/sig must contain 'p q'");
  IlseProblem problem{read_matrix_file((root / "A.mat").string()), read_vector_file((root / "b.vec").string()),
                      read_matrix_file((root / "B.mat").string()), read_vector_file((root / "d.vec").string()),
                      SignatureMatrix(p, q)};
  problem.validate();
  return problem;
}

void save_problem(const std::string& dir, const IlseProblem& problem) {
  problem.validate();
  const std::filesystem::path root(dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory '" + dir + "': " + ec.message());
  write_matrix_file((root / "A.mat").string(), problem.A);
  write_vector_file((root / "b.vec").string(), problem.b);
  write_matrix_file((root / "B.mat").string(), problem.B);
  write_vector_file((root / "d.vec").string(), problem.d);
  std::ofstream sig = open_out((root / "sig").string());
  sig << problem.sig.p() << ' ' << problem.sig.q() << '\n';
}

}  // namespace ilse
