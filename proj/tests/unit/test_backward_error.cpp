#include "doctest.h"

#include "ilse/backward_error.hpp"
#include "ilse/solver.hpp"
#include "ilse/testgen.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace ilse;

namespace {

const Vector y01 = Vector::Constant(1, 0.1);

struct Small {
  IlseProblem P;
  Vector y;
};

// Small generated instance with a perturbed-solve candidate y.
Small small_case(std::uint64_t seed, double eps = 1e-4) {
  GenParams g;
  g.m = 9, g.n = 4, g.s = 2, g.p = 5, g.q = 4;
  g.kappa_A = 50, g.kappa_B = 20;
  g.seed = seed;
  Small c{gen_ilse_instance(g).problem, {}};
  c.y = solve_augmented(perturbed(c.P, gen_perturbation(c.P, eps, seed + 99))).x;
  return c;
}

}  // namespace

TEST_CASE("micro instance: J, c and rho by hand") {
  const IlseProblem P = oracle::t1();
  const Vector xi = xi_one(P, y01);
  CHECK(xi(0) == doctest::Approx(0.9).epsilon(1e-12));

  Matrix want(2, 6);
  want << 0.8, -1, 1, 0, -0.9, 0,  //
      0, 0, 0, 0, 0.1, -1;
  const LinearizationOperator op = assemble_J(P, y01, xi, {});
  CHECK((op.J - want).cwiseAbs().maxCoeff() <= 1e-15);

  const Vector c = rhs_vector(P, y01, xi);
  CHECK(std::abs(c(0)) <= 1e-15);
  CHECK(c(1) == doctest::Approx(-0.1).epsilon(1e-14));

  // J J^T = [[3.45, -0.09], [-0.09, 1.01]]; rho^2 = c^T (J J^T)^{-1} c.
  const double rho_hand = std::sqrt(0.01 * 3.45 / (3.45 * 1.01 - 0.09 * 0.09));
  CHECK(rho_hand == doctest::Approx(0.099620).epsilon(1e-5));
  CHECK(rho_at(P, y01, xi, {}) == doctest::Approx(rho_hand).epsilon(1e-14));
  CHECK(rho_at(P, y01, xi, {}) == doctest::Approx(oracle::min_norm(want, c)).epsilon(1e-14));
}

TEST_CASE("micro instance: alpha, tau0 and the report") {
  const IlseProblem P = oracle::t1();
  CHECK(alpha(P, y01, {}) == doctest::Approx(std::sqrt(2.64)).epsilon(1e-12));
  CHECK(alpha_lower_bound(P, y01, {}) == doctest::Approx(std::sqrt(1.81 / 1.01)).epsilon(1e-14));
  CHECK(tau_zero(P, y01, {}) == 1.0);
  CHECK(bound_constant(y01, {}) == doctest::Approx(std::sqrt(1.01)));
  CHECK(solution_distance_lower_bound(P, y01) == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-14));

  const BackwardErrorReport r = backward_error_bounds(P, y01, Vector::Constant(1, 1.0), {});
  CHECK(r.rho_xi1 == doctest::Approx(0.099620).epsilon(1e-4));
  REQUIRE(r.rho_xi0.has_value());
  CHECK(r.tau0 == 1.0);
  CHECK(r.small_rho_condition);
  CHECK(r.bounds_applicable);
  REQUIRE(r.mu_upper.has_value());
  CHECK(*r.mu_upper == doctest::Approx(2 * r.rho_xi1));
  CHECK(r.mu_lower <= r.rho_xi1);
  CHECK(r.distance_lower <= 0.1);
}

TEST_CASE("exact solution has zero estimate") {
  const IlseProblem P = oracle::t1();
  const Vector x = Vector::Zero(1);
  CHECK(rho_at(P, x, Vector::Constant(1, 1.0), {}) <= 1e-16);
  CHECK(xi_one(P, x)(0) == doctest::Approx(1.0));
  CHECK(solution_distance_lower_bound(P, x) == 0.0);
}

TEST_CASE("J matches its Kronecker form and the finite-difference linearization") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Small c = small_case(seed);
    const Vector xi = xi_one(c.P, c.y) + gen_gaussian_vector(c.P.s(), seed);
    const WeightScheme w{0.5, 2.0, 3.0};
    const Matrix J = assemble_J(c.P, c.y, xi, w).J;
    CHECK((J - oracle::kron_J(c.P, c.y, xi, w)).cwiseAbs().maxCoeff() <= 1e-14 * J.cwiseAbs().maxCoeff());
    const Matrix Jfd = oracle::fd_J(c.P, c.y, xi, w, 1e-6);
    CHECK((J - Jfd).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + J.cwiseAbs().maxCoeff()));
    CHECK((rhs_vector(c.P, c.y, xi) - oracle::rhs(c.P, c.y, xi)).norm() <= 1e-13);
  }
}

TEST_CASE("layout offsets") {
  const auto b = LinearizationOperator::layout(100, 50, 20);
  CHECK(b.e == 0);
  CHECK(b.f == 5000);
  CHECK(b.F == 5100);
  CHECK(b.g == 6100);
  CHECK(b.cols == 6120);
}

TEST_CASE("rho and tau against independent references") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Small c = small_case(seed);
    const Vector xi = xi_one(c.P, c.y) + 0.3 * gen_gaussian_vector(c.P.s(), seed + 7);
    const WeightScheme w{1.0, 1.0, 1.0};
    const Matrix J = oracle::kron_J(c.P, c.y, xi, w);
    const Vector rhs = oracle::rhs(c.P, c.y, xi);
    CHECK(rho_at(c.P, c.y, xi, w) == doctest::Approx(oracle::min_norm(J, rhs)).epsilon(1e-9));
    CHECK(tau_at(c.P, c.y, xi, w) == doctest::Approx(oracle::pinv_norm(J)).epsilon(1e-10));
    // tau0 bounds tau(xi) for every xi.
    CHECK(tau_at(c.P, c.y, xi, w) <= tau_zero(c.P, c.y, w) * (1 + 1e-12));
  }
}

TEST_CASE("min-norm solve returns a solution of minimum norm") {
  const Small c = small_case(11);
  const Vector xi = xi_one(c.P, c.y);
  const Matrix J = assemble_J(c.P, c.y, xi, {}).J;
  const Vector rhs = rhs_vector(c.P, c.y, xi);
  const MinNormSolve sol = min_norm_solve(J, rhs);
  CHECK((J * sol.z - rhs).norm() <= 1e-12 * (J.norm() * sol.z.norm() + rhs.norm()));
  CHECK(sol.norm == doctest::Approx(sol.z.norm()).epsilon(1e-13));
  // z lies in the row space of J.
  const Vector back = J.transpose() * (J * J.transpose()).ldlt().solve(J * sol.z);
  CHECK((back - sol.z).norm() <= 1e-10 * sol.z.norm());
}

TEST_CASE("rank-deficient J is reported with its sigma_min") {
  Matrix J = Matrix::Zero(2, 4);
  J(0, 0) = 1.0;
  try {
    min_norm_solve(J, Vector::Ones(2));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
    CHECK(e.detail() == 0.0);
  }
  CHECK_THROWS_AS(min_norm_solve(Matrix::Identity(3, 2), Vector::Ones(3)), Error);
}

TEST_CASE("xi1 and alpha against the normal-equation routes") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Small c = small_case(seed);
    CHECK((xi_one(c.P, c.y) - oracle::xi_one(c.P, c.y)).norm() <= 1e-10 * (1 + oracle::xi_one(c.P, c.y).norm()));
    for (double t1 : {0.1, 1.0, 10.0}) {
      const WeightScheme w{t1, 1.0, 1.0};
      CHECK(alpha(c.P, c.y, w) == doctest::Approx(oracle::alpha_gram(c.P, c.y, w)).epsilon(1e-7));
      CHECK(alpha(c.P, c.y, w) >= alpha_lower_bound(c.P, c.y, w) * (1 - 1e-12));
    }
  }
}

TEST_CASE("tau0 equals the pseudoinverse norm of the xi-free matrix") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Small c = small_case(seed);
    for (double t3 : {0.1, 1.0, 10.0}) {
      const WeightScheme w{1.0, 1.0, t3};
      Matrix M = oracle::kron_J(c.P, c.y, Vector::Zero(c.P.s()), w);
      const auto b = LinearizationOperator::layout(c.P.m(), c.P.n(), c.P.s());
      M.middleCols(b.F, b.g - b.F).setZero();
      CHECK(tau_zero(c.P, c.y, w) == doctest::Approx(oracle::pinv_norm(M)).epsilon(1e-10));
    }
  }
}

TEST_CASE("fault injection changes J") {
  const Small c = small_case(2);
  const Vector xi = xi_one(c.P, c.y);
  const Matrix good = assemble_J(c.P, c.y, xi, {}).J;
  const Matrix bad = detail::assemble_J(c.P, c.y, xi, {}, {true}).J;
  CHECK((good - bad).norm() > 1e-3);
  CHECK(good.rightCols(good.cols() - c.P.n() * c.P.m()) == bad.rightCols(bad.cols() - c.P.n() * c.P.m()));
}

TEST_CASE("distance lower bound never exceeds the true distance") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Small c = small_case(seed, 1e-3);
    const IlseSolution x = solve_ilse(c.P);
    CHECK(solution_distance_lower_bound(c.P, c.y) <= (x.x - c.y).norm());
  }
}

TEST_CASE("bound map is monotone and below its argument") {
  CHECK(lower_bound_map(0.0, 1.0, 1.0) == 0.0);
  double prev = 0.0;
  for (double t = 1e-12; t < 1e3; t *= 1.7) {
    const double v = lower_bound_map(t, 3.0, 2.0);
    CHECK(v >= prev);
    CHECK(v <= t);
    prev = v;
  }
}

TEST_CASE("consistent data: bounds flagged as not applicable") {
  IlseProblem P = oracle::t1();
  P.b << 0.1, 0.0;
  P.d << 0.1;
  const BackwardErrorReport r = backward_error_bounds(P, y01, std::nullopt, {});
  CHECK_FALSE(r.bounds_applicable);
  CHECK_FALSE(r.mu_upper.has_value());
  CHECK(r.rho_xi1 <= 1e-16);
}

TEST_CASE("argument checks") {
  const IlseProblem P = oracle::t1();
  CHECK_THROWS_AS(rho_at(P, Vector::Zero(2), Vector::Zero(1), {}), Error);
  CHECK_THROWS_AS(rho_at(P, Vector::Zero(1), Vector::Zero(2), {}), Error);
  CHECK_THROWS_AS(rho_at(P, Vector::Zero(1), Vector::Zero(1), {0, 1, 1}), Error);
}
