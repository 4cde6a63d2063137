#pragma once

// Domain types for the equality-constrained indefinite least squares problem
//
//   min_x (b - Ax)^T S (b - Ax)   subject to   Bx = d,
//
// where S = diag(I_p, -I_q) is a signature matrix. All matrices are dense,
// column-major Eigen objects.

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace ilse {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  InvalidWeight,
  NotWellPosed,
  Precondition,
  RankDeficient,
  InfiniteTau,
  Io,
  PropertyFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, double detail = 0.0)
      : std::runtime_error(what), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  /// Numeric payload; the offending sigma_min for RankDeficient errors.
  double detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  double detail_;
};

/// Diag(I_p, -I_q), stored as (p, q). Never materialized.
class SignatureMatrix {
 public:
  SignatureMatrix() = default;
  SignatureMatrix(Index p, Index q);

  Index p() const noexcept { return p_; }
  Index q() const noexcept { return q_; }
  Index size() const noexcept { return p_ + q_; }

  double sign(Index i) const noexcept { return i < p_ ? 1.0 : -1.0; }

  /// S v. Throws DimensionMismatch if v.size() != p + q.
  Vector apply(const Eigen::Ref<const Vector>& v) const;
  /// S M (negates the last q rows).
  Matrix apply_rows(const Eigen::Ref<const Matrix>& M) const;
  /// Dense S; only for tests and small reference computations.
  Matrix dense() const;

  bool operator==(const SignatureMatrix&) const = default;

 private:
  Index p_ = 0;
  Index q_ = 0;
};

Vector apply_signature(const SignatureMatrix& sig, const Eigen::Ref<const Vector>& v);

struct IlseProblem {
  Matrix A;  // m x n
  Vector b;  // m
  Matrix B;  // s x n
  Vector d;  // s
  SignatureMatrix sig;

  Index m() const noexcept { return A.rows(); }
  Index n() const noexcept { return A.cols(); }
  Index s() const noexcept { return B.rows(); }

  /// Checks m = p + q, m >= n, s <= n, conforming sizes and finite entries.
  void validate() const;
};

IlseProblem make_problem(Matrix A, Vector b, Matrix B, Vector d, SignatureMatrix sig);

struct IlseSolution {
  Vector x;       // n
  Vector xi;      // s, Lagrange multipliers
  Vector lambda;  // s, equals -xi
  Vector r;       // m, b - A x
  Vector s_vec;   // m, S r
};

struct WeightScheme {
  double theta1 = 1.0;
  double theta2 = 1.0;
  double theta3 = 1.0;

  void validate() const;
};

/// Perturbations (E, f, F, g) of (A, b, B, d).
struct PerturbationQuadruple {
  Matrix E;
  Vector f;
  Matrix F;
  Vector g;

  static PerturbationQuadruple zeros(Index m, Index n, Index s);
  void check_conforms(const IlseProblem& problem) const;
};

/// Frobenius norm of [E, theta1 f; theta2 F, theta3 g].
double weighted_perturbation_norm(const PerturbationQuadruple& pert, const WeightScheme& w);

/// (A + E, b + f, B + F, d + g) with the same signature.
IlseProblem perturbed(const IlseProblem& problem, const PerturbationQuadruple& pert);

struct BackwardErrorReport {
  double rho_xi1 = 0.0;
  std::optional<double> rho_xi0;
  double tau0 = 0.0;
  double alpha = 0.0;
  double alpha_lower = 0.0;
  // 4 tau0 rho(xi1) sqrt(theta1^-2 + |y|^2) < 1
  bool small_rho_condition = false;
  // False when r_y = 0; the theorems then say nothing.
  bool bounds_applicable = true;
  std::optional<double> mu_upper;
  // Evaluated at rho(xi1) >= rho, so indicative rather than certified.
  double mu_lower = 0.0;
  double distance_lower = 0.0;
  Vector xi1;
};

}  // namespace ilse
