#pragma once

// Plain-text matrices: first line "rows cols", then row-major entries. Vectors
// are single-column matrices. A problem bundle is a directory holding A.mat,
// b.vec, B.mat, d.vec and sig (a file containing "p q").

#include "ilse/core.hpp"

#include <iosfwd>
#include <string>

namespace ilse {

Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::string& path);
/// Entries are written with 17 significant digits, so a round trip is exact.
void write_matrix(std::ostream& out, const Eigen::Ref<const Matrix>& M);
void write_matrix_file(const std::string& path, const Eigen::Ref<const Matrix>& M);

Vector read_vector_file(const std::string& path);
void write_vector_file(const std::string& path, const Eigen::Ref<const Vector>& v);

IlseProblem load_problem(const std::string& dir);
/// Creates `dir` if needed.
void save_problem(const std::string& dir, const IlseProblem& problem);

}  // namespace ilse
