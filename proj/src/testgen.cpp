#include "ilse/testgen.hpp"

#include "ilse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

namespace ilse {

namespace {

enum Stream : std::uint64_t {
  kSigmaOrthogonal = 1,
  kRightOrthogonal = 2,
  kConstraint = 3,
  kRhsB = 4,
  kRhsD = 5,
  kLeftBlock = 11,
  kRightBlock = 12,
  kRotations = 13,
  kLeftFactor = 21,
  kRightFactor = 22,
  kRetry = 0x100,
};

using Rng = std::mt19937_64;

double gaussian(Rng& rng) {
  std::normal_distribution<double> normal;
  return normal(rng);
}

Matrix gaussian_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
  return M;
}

Vector gaussian_vector(Rng& rng, Index size) {
  std::normal_distribution<double> normal;
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = normal(rng);
  return v;
}

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ stream;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void GenParams::validate() const {
  if (m < 1 || n < 1 || s < 0 || p < 0 || q < 0)
    throw Error(ErrorCode::InvalidArgument, "dimensions must be positive");
  if (p + q != m) throw Error(ErrorCode::InvalidArgument, "p + q must equal m");
  if (m < n) throw Error(ErrorCode::InvalidArgument, "m must be >= n");
  if (s > n) throw Error(ErrorCode::InvalidArgument, "s must be <= n");
  if (!(kappa_A >= 1.0) || !(kappa_B >= 1.0) || !std::isfinite(kappa_A) || !std::isfinite(kappa_B))
    throw Error(ErrorCode::InvalidArgument, "condition numbers must be finite and >= 1");
  if (!(hyper_bound >= 0.0) || !std::isfinite(hyper_bound))
    throw Error(ErrorCode::InvalidArgument, "hyper_bound must be finite and >= 0");
}

Matrix gen_random_orthogonal(Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "orthogonal matrix order must be >= 1");
  Rng rng(seed);
  Matrix Q = Matrix::Identity(n, n);
  Vector signs(n);
  for (Index k = n - 2; k >= 0; --k) {
    const Index len = n - k;
    Vector x = gaussian_vector(rng, len);
    const double sgn = sign_of(x(0));
    const double sx = sgn * x.norm();
    signs(k) = -sgn;
    x(0) += sx;
    const double beta = sx * x(0);
    auto rows = Q.bottomRows(len);
    const Eigen::RowVectorXd yt = x.transpose() * rows;
    rows -= x * (yt / beta);
  }
  signs(n - 1) = sign_of(gaussian(rng));
  return signs.asDiagonal() * Q;
}

Matrix gen_sigma_orthogonal(Index p, Index q, std::uint64_t seed, double hyper_bound) {
  if (p < 0 || q < 0 || p + q < 1) throw Error(ErrorCode::InvalidArgument, "p + q must be >= 1");
  if (!(hyper_bound >= 0.0)) throw Error(ErrorCode::InvalidArgument, "hyper_bound must be >= 0");
  const Index m = p + q;

  auto block_orthogonal = [&](std::uint64_t stream) {
    Matrix W = Matrix::Zero(m, m);
    if (p > 0) W.topLeftCorner(p, p) = gen_random_orthogonal(p, derive_seed(seed, stream));
    if (q > 0) W.bottomRightCorner(q, q) = gen_random_orthogonal(q, derive_seed(seed, stream + 100));
    return W;
  };

  // Disjoint planes make the rotations commute, so their product is just
  // the identity with 2x2 [cosh sinh; sinh cosh] blocks written in.
  Matrix H = Matrix::Identity(m, m);
  const Index k = std::min(p, q);
  if (k > 0) {
    Rng rng(derive_seed(seed, kRotations));
    std::vector<Index> plus(static_cast<std::size_t>(p)), minus(static_cast<std::size_t>(q));
    std::iota(plus.begin(), plus.end(), Index{0});
    std::iota(minus.begin(), minus.end(), p);
    std::shuffle(plus.begin(), plus.end(), rng);
    std::shuffle(minus.begin(), minus.end(), rng);
    std::uniform_real_distribution<double> angle(-hyper_bound, hyper_bound);
    for (Index r = 0; r < k; ++r) {
      const Index i = plus[static_cast<std::size_t>(r)], j = minus[static_cast<std::size_t>(r)];
      const double t = hyper_bound > 0.0 ? angle(rng) : 0.0;
      H(i, i) = std::cosh(t);
      H(j, j) = std::cosh(t);
      H(i, j) = std::sinh(t);
      H(j, i) = std::sinh(t);
    }
  }
  return block_orthogonal(kLeftBlock) * H * block_orthogonal(kRightBlock);
}

Matrix gen_geometric_diagonal(Index rows, Index cols, double kappa) {
  if (cols < 1 || rows < cols) throw Error(ErrorCode::InvalidArgument, "need rows >= cols >= 1");
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw Error(ErrorCode::InvalidArgument, "kappa must be >= 1");
  Matrix D = Matrix::Zero(rows, cols);
  D(0, 0) = 1.0;
  for (Index i = 1; i < cols; ++i)
    D(i, i) = std::pow(kappa, -static_cast<double>(i) / static_cast<double>(cols - 1));
  if (cols > 1) D(cols - 1, cols - 1) = 1.0 / kappa;
  return D;
}

Matrix gen_conditioned_matrix(Index s, Index n, double kappa, std::uint64_t seed) {
  if (s < 0 || n < 1 || s > n) throw Error(ErrorCode::InvalidArgument, "need 0 <= s <= n");
  if (s == 0) return Matrix(0, n);
  const Matrix D = gen_geometric_diagonal(s, s, kappa);
  const Matrix U = gen_random_orthogonal(s, derive_seed(seed, kLeftFactor));
  const Matrix V = gen_random_orthogonal(n, derive_seed(seed, kRightFactor));
  return U * D * V.topRows(s);
}

Vector gen_gaussian_vector(Index size, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_vector(rng, size);
}

GeneratedInstance gen_ilse_instance(const GenParams& params) {
  params.validate();
  const Index m = params.m, n = params.n, s = params.s;
  constexpr int kMaxAttempts = 10;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t seed = attempt == 0 ? params.seed : derive_seed(params.seed, kRetry + attempt);

    const Matrix Q = gen_sigma_orthogonal(params.p, params.q, derive_seed(seed, kSigmaOrthogonal),
                                          params.hyper_bound);
    const Matrix D = gen_geometric_diagonal(m, n, params.kappa_A);
    const Matrix U = gen_random_orthogonal(n, derive_seed(seed, kRightOrthogonal));
    Matrix A = Q * D * U;
    Eigen::JacobiSVD<Matrix> svd(A);
    const Vector& sv = svd.singularValues();
    A /= sv(0);

    GeneratedInstance out{
        IlseProblem{std::move(A), gen_gaussian_vector(m, derive_seed(seed, kRhsB)),
                    gen_conditioned_matrix(s, n, params.kappa_B, derive_seed(seed, kConstraint)),
                    gen_gaussian_vector(s, derive_seed(seed, kRhsD)), SignatureMatrix(params.p, params.q)},
        sv(0) / sv(n - 1), attempt + 1};
    if (check_well_posedness(out.problem).well_posed()) return out;
  }
  std::ostringstream os;
  os << "no well-posed instance after " << kMaxAttempts << " attempts (kappa_A = " << params.kappa_A
     << ", kappa_B = " << params.kappa_B << ")";
  throw Error(ErrorCode::NotWellPosed, os.str());
}

PerturbationQuadruple gen_perturbation(const IlseProblem& problem, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::InvalidArgument, "eps must be >= 0");
  Rng rng(seed);
  const Index m = problem.m(), n = problem.n(), s = problem.s();
  PerturbationQuadruple pert;
  pert.E = eps * gaussian_matrix(rng, m, n);
  pert.f = (eps * problem.b.norm()) * gaussian_vector(rng, m);
  pert.F = eps * gaussian_matrix(rng, s, n);
  pert.g = (eps * problem.d.norm()) * gaussian_vector(rng, s);
  return pert;
}

}  // namespace ilse
