#include "ilse/core.hpp"

#include <cmath>
#include <sstream>

namespace ilse {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::InvalidWeight: return "invalid weight";
    case ErrorCode::NotWellPosed: return "not well posed";
    case ErrorCode::Precondition: return "precondition violated";
    case ErrorCode::RankDeficient: return "rank deficient";
    case ErrorCode::InfiniteTau: return "infinite tau0";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::PropertyFailure: return "property failure";
  }
  return "unknown error";
}

namespace {

std::string dims_message(const char* what, Index got, Index want) {
  std::ostringstream os;
  os << what << ": got " << got << ", expected " << want;
  return os.str();
}

void require_size(const char* what, Index got, Index want) {
  if (got != want) throw Error(ErrorCode::DimensionMismatch, dims_message(what, got, want));
}

}  // namespace

SignatureMatrix::SignatureMatrix(Index p, Index q) : p_(p), q_(q) {
  if (p < 0 || q < 0) throw Error(ErrorCode::InvalidArgument, "signature counts must be nonnegative");
}

Vector SignatureMatrix::apply(const Eigen::Ref<const Vector>& v) const {
  require_size("signature operand length", v.size(), size());
  Vector out = v;
  out.tail(q_) = -out.tail(q_);
  return out;
}

Matrix SignatureMatrix::apply_rows(const Eigen::Ref<const Matrix>& M) const {
  require_size("signature operand rows", M.rows(), size());
  Matrix out = M;
  out.bottomRows(q_) = -out.bottomRows(q_);
  return out;
}

Matrix SignatureMatrix::dense() const {
  Matrix S = Matrix::Identity(size(), size());
  S.bottomRightCorner(q_, q_) = -Matrix::Identity(q_, q_);
  return S;
}

Vector apply_signature(const SignatureMatrix& sig, const Eigen::Ref<const Vector>& v) {
  return sig.apply(v);
}

void IlseProblem::validate() const {
  require_size("length of b", b.size(), m());
  require_size("columns of B", B.cols(), n());
  require_size("length of d", d.size(), s());
  require_size("signature size p + q", sig.size(), m());
  if (m() < n()) throw Error(ErrorCode::DimensionMismatch, dims_message("m must be >= n; m", m(), n()));
  if (s() > n()) throw Error(ErrorCode::DimensionMismatch, dims_message("s must be <= n; s", s(), n()));
  if (!A.allFinite() || !b.allFinite() || !B.allFinite() || !d.allFinite())
    throw Error(ErrorCode::InvalidArgument, "problem data contains non-finite entries");
}

IlseProblem make_problem(Matrix A, Vector b, Matrix B, Vector d, SignatureMatrix sig) {
  IlseProblem problem{std::move(A), std::move(b), std::move(B), std::move(d), sig};
  problem.validate();
  return problem;
}

void WeightScheme::validate() const {
  for (double t : {theta1, theta2, theta3}) {
    if (!(t > 0.0) || !std::isfinite(t))
      throw Error(ErrorCode::InvalidWeight, "weights must be strictly positive and finite");
  }
}

PerturbationQuadruple PerturbationQuadruple::zeros(Index m, Index n, Index s) {
  return {Matrix::Zero(m, n), Vector::Zero(m), Matrix::Zero(s, n), Vector::Zero(s)};
}

void PerturbationQuadruple::check_conforms(const IlseProblem& problem) const {
  require_size("rows of E", E.rows(), problem.m());
  require_size("columns of E", E.cols(), problem.n());
  require_size("length of f", f.size(), problem.m());
  require_size("rows of F", F.rows(), problem.s());
  require_size("columns of F", F.cols(), problem.n());
  require_size("length of g", g.size(), problem.s());
}

double weighted_perturbation_norm(const PerturbationQuadruple& pert, const WeightScheme& w) {
  w.validate();
  require_size("rows of f", pert.f.size(), pert.E.rows());
  require_size("rows of g", pert.g.size(), pert.F.rows());
  require_size("columns of F", pert.F.cols(), pert.E.cols());
  // Scale-safe: stableNorm avoids overflow for large entries.
  const double e = pert.E.stableNorm();
  const double f = w.theta1 * pert.f.stableNorm();
  const double F = w.theta2 * pert.F.stableNorm();
  const double g = w.theta3 * pert.g.stableNorm();
  return Eigen::Vector4d(e, f, F, g).stableNorm();
}

IlseProblem perturbed(const IlseProblem& problem, const PerturbationQuadruple& pert) {
  pert.check_conforms(problem);
  return IlseProblem{problem.A + pert.E, problem.b + pert.f, problem.B + pert.F, problem.d + pert.g,
                     problem.sig};
}

}  // namespace ilse
