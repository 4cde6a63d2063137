#include "ilse/solver.hpp"

#include <algorithm>
#include <cmath>

namespace ilse {

namespace {

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;

void require_constraints(const IlseProblem& problem) {
  if (problem.s() == 0)
    throw Error(ErrorCode::Precondition,
                "no equality constraints (s = 0); the unconstrained problem is not supported");
}

}  // namespace

Matrix null_space_basis(const Eigen::Ref<const Matrix>& B) {
  const Index n = B.cols();
  const Index s = B.rows();
  if (s == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(B.transpose());
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.rightCols(n - s);
}

WellPosednessReport check_well_posedness(const IlseProblem& problem, double rank_tolerance,
                                         double pd_tolerance) {
  problem.validate();
  const Index n = problem.n();
  const Index s = problem.s();
  WellPosednessReport report;

  if (rank_tolerance < 0.0) rank_tolerance = static_cast<double>(std::max(s, n)) * kUnitRoundoff;
  if (s == 0) {
    report.rank_ok = true;
  } else {
    Eigen::JacobiSVD<Matrix> svd(problem.B);
    const Vector& sv = svd.singularValues();
    report.rank_ok = sv(0) > 0.0 && sv(s - 1) > rank_tolerance * sv(0);
  }

  const Matrix G = problem.A.transpose() * problem.sig.apply_rows(problem.A);
  if (pd_tolerance < 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> full(G, Eigen::EigenvaluesOnly);
    pd_tolerance = kUnitRoundoff * full.eigenvalues().cwiseAbs().maxCoeff();
  }
  report.pd_tolerance = pd_tolerance;

  if (!report.rank_ok) {
    // Without full row rank the null-space dimension is wrong; report the
    // definiteness test as failed rather than guessing a basis.
    report.projected_pd_ok = false;
    report.min_projected_eig = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  if (s == n) {
    report.min_projected_eig = std::numeric_limits<double>::infinity();
    report.projected_pd_ok = true;
    return report;
  }
  const Matrix Z = null_space_basis(problem.B);
  const Matrix P = Z.transpose() * G * Z;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
  report.min_projected_eig = eig.eigenvalues()(0);
  report.projected_pd_ok = report.min_projected_eig > pd_tolerance;
  return report;
}

AugmentedSystem assemble_augmented(const IlseProblem& problem) {
  problem.validate();
  require_constraints(problem);
  const Index m = problem.m(), n = problem.n(), s = problem.s();
  const Index N = s + m + n;

  AugmentedSystem sys{Matrix::Zero(N, N), Vector::Zero(N)};
  sys.K.block(0, s + m, s, n) = problem.B;
  sys.K.block(s + m, 0, n, s) = problem.B.transpose();
  for (Index i = 0; i < m; ++i) sys.K(s + i, s + i) = problem.sig.sign(i);
  sys.K.block(s, s + m, m, n) = problem.A;
  sys.K.block(s + m, s, n, m) = problem.A.transpose();

  sys.rhs.head(s) = problem.d;
  sys.rhs.segment(s, m) = problem.b;
  return sys;
}

IlseSolution solve_ilse(const IlseProblem& problem) {
  problem.validate();
  require_constraints(problem);
  const WellPosednessReport wp = check_well_posedness(problem);
  if (!wp.rank_ok) throw Error(ErrorCode::Precondition, "B does not have full row rank");
  if (!wp.projected_pd_ok)
    throw Error(ErrorCode::Precondition, "A^T S A is not positive definite on the null space of B",
                wp.min_projected_eig);
  return solve_augmented(problem);
}

IlseSolution solve_augmented(const IlseProblem& problem) {
  const Index n = problem.n(), s = problem.s();
  const AugmentedSystem sys = assemble_augmented(problem);

  Eigen::PartialPivLU<Matrix> lu(sys.K);
  const Vector pivots = lu.matrixLU().diagonal();
  if (!pivots.allFinite() || (pivots.array() == 0.0).any())
    throw Error(ErrorCode::NotWellPosed, "augmented matrix is singular");
  const Vector u = lu.solve(sys.rhs);
  if (!u.allFinite()) throw Error(ErrorCode::NotWellPosed, "augmented solve produced non-finite values");

  IlseSolution sol;
  sol.lambda = u.head(s);
  sol.xi = -sol.lambda;
  sol.x = u.tail(n);
  sol.r = problem.b - problem.A * sol.x;
  sol.s_vec = problem.sig.apply(sol.r);
  return sol;
}

std::pair<Vector, Vector> normal_equation_residuals(const IlseProblem& problem,
                                                    const Eigen::Ref<const Vector>& x,
                                                    const Eigen::Ref<const Vector>& xi) {
  if (x.size() != problem.n() || xi.size() != problem.s())
    throw Error(ErrorCode::DimensionMismatch, "candidate x or xi does not conform to the problem");
  const Vector r = problem.b - problem.A * x;
  Vector r1 = problem.B.transpose() * xi - problem.A.transpose() * problem.sig.apply(r);
  Vector r2 = problem.d - problem.B * x;
  return {std::move(r1), std::move(r2)};
}

double augmented_residual(const IlseProblem& problem, const IlseSolution& sol) {
  const AugmentedSystem sys = assemble_augmented(problem);
  const Index m = problem.m(), n = problem.n(), s = problem.s();
  Vector u(s + m + n);
  u << sol.lambda, sol.s_vec, sol.x;
  const double num = (sys.K * u - sys.rhs).norm();
  const double den = sys.K.norm() * u.norm() + sys.rhs.norm();
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace ilse
