#include "ilse/backward_error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ilse {

namespace {

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;

void check_candidate(const IlseProblem& problem, const Eigen::Ref<const Vector>& y) {
  problem.validate();
  if (y.size() != problem.n())
    throw Error(ErrorCode::DimensionMismatch, "candidate y must have length n");
}

void check_multiplier(const IlseProblem& problem, const Eigen::Ref<const Vector>& xi) {
  if (xi.size() != problem.s())
    throw Error(ErrorCode::DimensionMismatch, "multiplier xi must have length s");
}

double numerical_rank_tolerance(const Eigen::Ref<const Matrix>& J) {
  return static_cast<double>(std::max(J.rows(), J.cols())) * kUnitRoundoff;
}

}  // namespace

LinearizationOperator::Blocks LinearizationOperator::layout(Index m, Index n, Index s) {
  Blocks b{};
  b.e = 0;
  b.f = n * m;
  b.F = b.f + m;
  b.g = b.F + n * s;
  b.cols = b.g + s;
  return b;
}

namespace detail {

LinearizationOperator assemble_J(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                                 const Eigen::Ref<const Vector>& xi, const WeightScheme& w,
                                 AssemblyFaults faults) {
  check_candidate(problem, y);
  check_multiplier(problem, xi);
  w.validate();

  const Index m = problem.m(), n = problem.n(), s = problem.s();
  const auto blk = LinearizationOperator::layout(m, n, s);
  const Vector sr = problem.sig.apply(problem.b - problem.A * y);
  // A^T S as an n x m matrix.
  const Matrix AtS = problem.sig.apply_rows(problem.A).transpose();
  const double kron_sign = faults.flip_kron_sign ? 1.0 : -1.0;

  Matrix J = Matrix::Zero(n + s, blk.cols);

  // I_n (x) (r^T S): row i carries (S r)^T in the i-th m-wide slot.
  for (Index i = 0; i < n; ++i) J.block(i, blk.e + i * m, 1, m) = sr.transpose();
  // - A^T S (y^T (x) I_m) = [-y_1 A^T S, ..., -y_n A^T S].
  for (Index j = 0; j < n; ++j) J.block(0, blk.e + j * m, n, m) += kron_sign * y(j) * AtS;

  J.block(0, blk.f, n, m) = AtS / w.theta1;

  // -(I_n (x) xi^T) / theta2
  for (Index i = 0; i < n; ++i) J.block(i, blk.F + i * s, 1, s) = -xi.transpose() / w.theta2;
  // (y^T (x) I_s) / theta2
  for (Index j = 0; j < n; ++j)
    J.block(n, blk.F + j * s, s, s).diagonal().setConstant(y(j) / w.theta2);

  J.block(n, blk.g, s, s).diagonal().setConstant(-1.0 / w.theta3);

  return LinearizationOperator{std::move(J), xi, w};
}

}  // namespace detail

LinearizationOperator assemble_J(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                                 const Eigen::Ref<const Vector>& xi, const WeightScheme& w) {
  return detail::assemble_J(problem, y, xi, w, {});
}

Vector rhs_vector(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                  const Eigen::Ref<const Vector>& xi) {
  check_candidate(problem, y);
  check_multiplier(problem, xi);
  const Index n = problem.n(), s = problem.s();
  const Vector r = problem.b - problem.A * y;
  Vector c(n + s);
  c.head(n) = problem.B.transpose() * xi - problem.A.transpose() * problem.sig.apply(r);
  c.tail(s) = problem.d - problem.B * y;
  return c;
}

MinNormSolve min_norm_solve(const Eigen::Ref<const Matrix>& J, const Eigen::Ref<const Vector>& c) {
  const Index rows = J.rows();
  if (c.size() != rows) throw Error(ErrorCode::DimensionMismatch, "right-hand side must have J.rows() entries");
  if (J.cols() < rows) throw Error(ErrorCode::DimensionMismatch, "J must have at least as many columns as rows");

  // J^T = Q R; J z = c with z = Q w forces R^T w = c, and |z| = |w|.
  Eigen::HouseholderQR<Matrix> qr(J.transpose());
  const Matrix R = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();

  Eigen::JacobiSVD<Matrix> svd(R);
  MinNormSolve out;
  out.sigma_max = svd.singularValues()(0);
  out.sigma_min = svd.singularValues()(rows - 1);
  if (!(out.sigma_min > numerical_rank_tolerance(J) * out.sigma_max)) {
    std::ostringstream os;
    os << "J is numerically rank deficient (sigma_min = " << out.sigma_min
       << ", sigma_max = " << out.sigma_max << ")";
    throw Error(ErrorCode::RankDeficient, os.str(), out.sigma_min);
  }

  const Vector w = R.transpose().triangularView<Eigen::Lower>().solve(c);
  out.z = Vector::Zero(J.cols());
  out.z.head(rows) = w;
  out.z = qr.householderQ() * out.z;
  out.norm = w.norm();
  return out;
}

double rho_at(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
              const Eigen::Ref<const Vector>& xi, const WeightScheme& w) {
  const LinearizationOperator op = assemble_J(problem, y, xi, w);
  return min_norm_solve(op.J, rhs_vector(problem, y, xi)).norm;
}

double tau_at(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
              const Eigen::Ref<const Vector>& xi, const WeightScheme& w) {
  const LinearizationOperator op = assemble_J(problem, y, xi, w);
  Eigen::BDCSVD<Matrix> svd(op.J.transpose());
  const Vector& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > numerical_rank_tolerance(op.J) * sv(0)))
    throw Error(ErrorCode::RankDeficient, "J is numerically rank deficient", smin);
  return 1.0 / smin;
}

Vector xi_one(const IlseProblem& problem, const Eigen::Ref<const Vector>& y) {
  check_candidate(problem, y);
  const Index s = problem.s();
  const Vector target = problem.A.transpose() * problem.sig.apply(problem.b - problem.A * y);
  if (s == 0) return Vector(0);

  Eigen::ColPivHouseholderQR<Matrix> qr(problem.B.transpose());
  qr.setThreshold(static_cast<double>(std::max(problem.n(), s)) * kUnitRoundoff);
  if (qr.rank() < s) throw Error(ErrorCode::RankDeficient, "B does not have full row rank");
  return qr.solve(target);
}

Matrix alpha_block(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const WeightScheme& w) {
  check_candidate(problem, y);
  w.validate();
  const Index m = problem.m(), n = problem.n();
  const Vector sr = problem.sig.apply(problem.b - problem.A * y);
  const Matrix AtS = problem.sig.apply_rows(problem.A).transpose();

  Matrix M(n, n * m + m);
  for (Index j = 0; j < n; ++j) {
    auto slot = M.block(0, j * m, n, m);
    slot = -y(j) * AtS;
    slot.row(j) += sr.transpose();
  }
  M.rightCols(m) = AtS / w.theta1;
  return M;
}

double alpha(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const WeightScheme& w) {
  const Matrix Mt = alpha_block(problem, y, w).transpose();
  Eigen::BDCSVD<Matrix> svd(Mt);
  const Vector& sv = svd.singularValues();
  return sv(sv.size() - 1);
}

double alpha_lower_bound(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                         const WeightScheme& w) {
  check_candidate(problem, y);
  w.validate();
  const double rnorm = (problem.b - problem.A * y).norm();
  return rnorm / std::sqrt(1.0 + w.theta1 * w.theta1 * y.squaredNorm());
}

double tau_zero(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const WeightScheme& w) {
  const double a = alpha(problem, y, w);
  if (!(a > 0.0)) throw Error(ErrorCode::InfiniteTau, "alpha = 0, tau0 is infinite");
  return std::max(w.theta3, 1.0 / a);
}

double bound_constant(const Eigen::Ref<const Vector>& y, const WeightScheme& w) {
  return std::sqrt(1.0 / (w.theta1 * w.theta1) + y.squaredNorm());
}

double lower_bound_map(double t, double tau0, double c) {
  return 2.0 * t / (1.0 + std::sqrt(1.0 + 4.0 * tau0 * c * t));
}

double solution_distance_lower_bound(const IlseProblem& problem, const Eigen::Ref<const Vector>& y) {
  check_candidate(problem, y);
  const Index n = problem.n(), s = problem.s();
  const double num = rhs_vector(problem, y, xi_one(problem, y)).norm();
  if (num == 0.0) return 0.0;

  Matrix stacked(n + s, n);
  stacked.topRows(n) = problem.A.transpose() * problem.sig.apply_rows(problem.A);
  stacked.bottomRows(s) = problem.B;
  Eigen::JacobiSVD<Matrix> svd(stacked);
  return num / svd.singularValues()(0);
}

BackwardErrorReport backward_error_bounds(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                                          const std::optional<Vector>& xi0, const WeightScheme& w) {
  check_candidate(problem, y);
  w.validate();
  if (xi0) check_multiplier(problem, *xi0);

  BackwardErrorReport rep;
  const Vector r = problem.b - problem.A * y;
  const double r_scale = problem.A.norm() * y.norm() + problem.b.norm();
  rep.bounds_applicable = r.norm() > kUnitRoundoff * r_scale;

  rep.xi1 = xi_one(problem, y);
  rep.rho_xi1 = rho_at(problem, y, rep.xi1, w);
  if (xi0) rep.rho_xi0 = rho_at(problem, y, *xi0, w);

  rep.alpha = alpha(problem, y, w);
  rep.alpha_lower = alpha_lower_bound(problem, y, w);
  if (!(rep.alpha > 0.0)) throw Error(ErrorCode::InfiniteTau, "alpha = 0, tau0 is infinite");
  rep.tau0 = std::max(w.theta3, 1.0 / rep.alpha);

  const double c = bound_constant(y, w);
  rep.small_rho_condition = 4.0 * rep.tau0 * rep.rho_xi1 * c < 1.0;
  if (rep.small_rho_condition && rep.bounds_applicable) rep.mu_upper = 2.0 * rep.rho_xi1;
  rep.mu_lower = lower_bound_map(rep.rho_xi1, rep.tau0, c);
  rep.distance_lower = solution_distance_lower_bound(problem, y);
  return rep;
}

}  // namespace ilse
