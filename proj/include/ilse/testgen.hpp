#pragma once

// Seeded generators for ILSE test problems: A = Q D U with Q S-orthogonal,
// D a geometric singular-value ladder and U Haar-orthogonal; B with a
// prescribed condition number; Gaussian right-hand sides and perturbations.
//
// Every generator is a pure function of its arguments. Independent parts of
// an instance draw from separate streams, seeded by derive_seed(seed, stream).

#include "ilse/core.hpp"

#include <cstdint>

namespace ilse {

/// SplitMix64 finalizer applied to seed ^ stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct GenParams {
  Index m = 100, n = 50, s = 20, p = 60, q = 40;
  double kappa_A = 1e2;
  double kappa_B = 1e2;
  std::uint64_t seed = 0;
  double hyper_bound = 1.0;

  void validate() const;
};

/// Q with Q^T S Q = S: orthogonal diagonal blocks around min(p, q) hyperbolic
/// rotations on disjoint random (i < p, j >= p) planes, angles in
/// [-hyper_bound, hyper_bound].
Matrix gen_sigma_orthogonal(Index p, Index q, std::uint64_t seed, double hyper_bound);

/// Haar-distributed orthogonal matrix from n - 1 Householder reflectors and a
/// random sign diagonal (the classic qmult construction).
Matrix gen_random_orthogonal(Index n, std::uint64_t seed);

/// rows x cols, diagonal kappa^{-(i-1)/(cols-1)}: 1 down to 1/kappa.
Matrix gen_geometric_diagonal(Index rows, Index cols, double kappa);

/// U diag(1 ... 1/kappa) V^T, s x n with s <= n; |B|_2 = 1, cond(B) = kappa.
Matrix gen_conditioned_matrix(Index s, Index n, double kappa, std::uint64_t seed);

Vector gen_gaussian_vector(Index size, std::uint64_t seed);

struct GeneratedInstance {
  IlseProblem problem;
  double achieved_kappa_A = 0.0;
  /// Number of generation attempts used (1 when the first draw was well posed).
  int attempts = 1;
};

/// Regenerates from derived sub-seeds up to 10 times if the draw is not well
/// posed; throws NotWellPosed after that.
GeneratedInstance gen_ilse_instance(const GenParams& params);

/// E = eps G1, f = eps |b| g2, F = eps G3, g = eps |d| g4, all entries N(0, 1).
PerturbationQuadruple gen_perturbation(const IlseProblem& problem, double eps, std::uint64_t seed);

}  // namespace ilse
