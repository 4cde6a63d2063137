#pragma once

// Direct numerical minimization of xi -> rho(xi). Used to measure how far the
// closed-form multiplier xi1 is from the true minimizer; never trusted as a
// certificate of global optimality.

#include "ilse/core.hpp"

#include <cstdint>
#include <optional>

namespace ilse {

struct MinimizeOptions {
  /// Evaluation budget per start; <= 0 selects 200 s.
  int max_evals = 0;
  double tol = 1e-8;
  /// Random starts in addition to xi1 (and xi0 when given).
  int random_starts = 2;
  std::uint64_t seed = 0;
  std::optional<Vector> xi0;
  /// Initial simplex edge; <= 0 derives it from |c(xi1)|.
  double initial_step = 0.0;
};

struct MinimizeResult {
  Vector xi_star;
  double rho_star = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Index of the start that produced xi_star (0 = xi1).
  int best_start = 0;
};

/// Multi-start Nelder-Mead over xi. Trial points where J is rank deficient are
/// treated as +inf; throws RankDeficient only if every start point fails.
MinimizeResult minimize_rho(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                            const WeightScheme& w, const MinimizeOptions& options = {});

/// Central-difference gradient of xi -> rho(xi).
Vector rho_gradient_fd(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                       const Eigen::Ref<const Vector>& xi, const WeightScheme& w, double h);

}  // namespace ilse
