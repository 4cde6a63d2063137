#pragma once

// Linearized normwise backward error for a candidate solution y.
//
// Dropping second-order terms from the perturbed optimality conditions gives
// an underdetermined linear system J(xi) z = c(xi) in the scaled unknowns
//
//   z = (vec(E), theta1 f, theta2 vec(F), theta3 g),
//
// with
//
//   J(xi) = [ I_n (x) r^T S - A^T S (y^T (x) I_m)   A^T S / theta1   -(I_n (x) xi^T) / theta2        0       ]
//           [               0                             0           (y^T (x) I_s) / theta2   -I_s / theta3 ]
//
//   c(xi) = ( B^T xi - A^T S r,  d - B y ),   r = b - A y.
//
// rho(xi) is the norm of the minimum-norm solution and tau(xi) = |J(xi)^+|_2.
// The estimate min_xi rho(xi) is bracketed through tau0 = max(theta3, 1/alpha),
// an upper bound on tau(xi) that does not depend on xi.

#include "ilse/core.hpp"

#include <optional>

namespace ilse {

/// sigma_min(J) / sigma_max(J) floor used by the full-row-rank property check.
inline constexpr double kFullRowRankTolerance = 1e-10;

struct LinearizationOperator {
  Matrix J;  // (n + s) x (nm + m + ns + s)
  Vector xi;
  WeightScheme weights;

  /// Column offsets of the vec(E), theta1 f, theta2 vec(F), theta3 g blocks.
  struct Blocks {
    Index e, f, F, g, cols;
  };
  static Blocks layout(Index m, Index n, Index s);
};

LinearizationOperator assemble_J(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                                 const Eigen::Ref<const Vector>& xi, const WeightScheme& w);

/// (B^T xi - A^T S r_y, d - B y).
Vector rhs_vector(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                  const Eigen::Ref<const Vector>& xi);

/// Minimum-norm solution of J z = c, via a QR factorization of J^T.
struct MinNormSolve {
  Vector z;
  double norm = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Throws RankDeficient (detail = sigma_min) when J is numerically rank
/// deficient: sigma_min <= max(rows, cols) u sigma_max.
MinNormSolve min_norm_solve(const Eigen::Ref<const Matrix>& J, const Eigen::Ref<const Vector>& c);

double rho_at(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
              const Eigen::Ref<const Vector>& xi, const WeightScheme& w);

double tau_at(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
              const Eigen::Ref<const Vector>& xi, const WeightScheme& w);

/// Least-squares multiplier (B^T)^+ A^T S r_y; it minimizes |c(xi)|_2.
Vector xi_one(const IlseProblem& problem, const Eigen::Ref<const Vector>& y);

/// [I_n (x) r^T S - A^T S (y^T (x) I_m),  A^T S / theta1], the xi-free block of J.
Matrix alpha_block(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const WeightScheme& w);

/// sigma_min of alpha_block, from an economy SVD of its transpose.
double alpha(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const WeightScheme& w);

/// |r_y|_2 / sqrt(1 + theta1^2 |y|_2^2).
double alpha_lower_bound(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                         const WeightScheme& w);

/// max(theta3, 1/alpha). Throws InfiniteTau when alpha = 0.
double tau_zero(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const WeightScheme& w);

/// sqrt(theta1^-2 + |y|_2^2), the constant multiplying tau0 in every bound.
double bound_constant(const Eigen::Ref<const Vector>& y, const WeightScheme& w);

/// 2t / (1 + sqrt(1 + 4 tau0 c t)).
double lower_bound_map(double t, double tau0, double c);

/// |c(xi1)|_2 / |[A^T S A; B]|_2, a lower bound on |x_exact - y|_2.
double solution_distance_lower_bound(const IlseProblem& problem, const Eigen::Ref<const Vector>& y);

BackwardErrorReport backward_error_bounds(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                                          const std::optional<Vector>& xi0, const WeightScheme& w);

namespace detail {

/// Fault-injection switch for the property suite: flips the sign of the
/// A^T S (y^T (x) I_m) term in J. Never set outside tests.
struct AssemblyFaults {
  bool flip_kron_sign = false;
};

LinearizationOperator assemble_J(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                                 const Eigen::Ref<const Vector>& xi, const WeightScheme& w,
                                 AssemblyFaults faults);

}  // namespace detail

}  // namespace ilse
