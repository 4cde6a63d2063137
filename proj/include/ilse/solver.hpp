#pragma once

#include "ilse/core.hpp"

#include <limits>
#include <utility>

namespace ilse {

struct WellPosednessReport {
  bool rank_ok = false;
  bool projected_pd_ok = false;
  /// Smallest eigenvalue of Z^T A^T S A Z, Z an orthonormal basis of N(B);
  /// +inf when N(B) = {0}.
  double min_projected_eig = std::numeric_limits<double>::infinity();
  double pd_tolerance = 0.0;

  bool well_posed() const noexcept { return rank_ok && projected_pd_ok; }
};

/// Negative tolerances select the defaults: max(s, n) u for the rank test and
/// u |A^T S A|_2 for the definiteness test.
WellPosednessReport check_well_posedness(const IlseProblem& problem, double rank_tolerance = -1.0,
                                         double pd_tolerance = -1.0);

/// Orthonormal basis of N(B) from a full Householder QR of B^T.
Matrix null_space_basis(const Eigen::Ref<const Matrix>& B);

struct AugmentedSystem {
  Matrix K;    // [0 0 B; 0 S A; B^T A^T 0], unknowns (lambda, s, x)
  Vector rhs;  // (d, b, 0)
};

AugmentedSystem assemble_augmented(const IlseProblem& problem);

/// Direct solve of the augmented system. Throws Precondition for s = 0 or an
/// ill-posed problem, NotWellPosed when the factorization finds K singular.
IlseSolution solve_ilse(const IlseProblem& problem);

/// The augmented solve alone, without the well-posedness precondition. For a
/// problem that is not positive definite on N(B) the result is a stationary
/// point rather than a minimizer. Throws NotWellPosed if K is singular.
IlseSolution solve_augmented(const IlseProblem& problem);

/// r1 = B^T xi - A^T S (b - A x), r2 = d - B x.
std::pair<Vector, Vector> normal_equation_residuals(const IlseProblem& problem,
                                                    const Eigen::Ref<const Vector>& x,
                                                    const Eigen::Ref<const Vector>& xi);

/// |K u - rhs|_2 / (|K|_F |u|_2 + |rhs|_2) with u = (lambda, s_vec, x).
double augmented_residual(const IlseProblem& problem, const IlseSolution& sol);

}  // namespace ilse
