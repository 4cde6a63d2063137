#include "doctest.h"

#include "ilse/matrix_io.hpp"
#include "ilse/testgen.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ilse;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ilse_io_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("text matrices round-trip exactly") {
  Matrix M(2, 3);
  M << 1.0 / 3.0, -2.5e-300, 7, 0, 1e300, -0.1;
  std::stringstream ss;
  write_matrix(ss, M);
  CHECK(ss.str().rfind("2 3\n", 0) == 0);
  CHECK(read_matrix(ss) == M);

  std::istringstream empty("0 4\n");
  CHECK(read_matrix(empty).cols() == 4);
}

TEST_CASE("malformed matrices are rejected") {
  for (const char* text : {"", "2", "2 2\n1 2 3", "1 1\nx", "1 1\n1 2", "-1 2\n"}) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_matrix(in), Error);
  }
}

TEST_CASE("problem bundles") {
  GenParams g;
  g.m = 9, g.n = 4, g.s = 2, g.p = 5, g.q = 4, g.seed = 3;
  const IlseProblem P = gen_ilse_instance(g).problem;
  const auto dir = scratch("bundle");
  save_problem(dir.string(), P);
  for (const char* f : {"A.mat", "b.vec", "B.mat", "d.vec", "sig"}) CHECK(std::filesystem::exists(dir / f));
  const IlseProblem Q = load_problem(dir.string());
  CHECK(Q.A == P.A);
  CHECK(Q.b == P.b);
  CHECK(Q.B == P.B);
  CHECK(Q.d == P.d);
  CHECK(Q.sig == P.sig);

  std::ofstream(dir / "sig") << "5 5\n";
  CHECK_THROWS_AS(load_problem(dir.string()), Error);
  CHECK_THROWS_AS(load_problem((dir / "missing").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("vector files need one column") {
  const auto dir = scratch("vec");
  std::filesystem::create_directories(dir);
  write_matrix_file((dir / "m").string(), Matrix::Ones(2, 2));
  CHECK_THROWS_AS(read_vector_file((dir / "m").string()), Error);
  write_vector_file((dir / "v").string(), Vector::LinSpaced(3, 0, 1));
  CHECK(read_vector_file((dir / "v").string()) == Vector::LinSpaced(3, 0, 1));
  std::filesystem::remove_all(dir);
}
