// Property suite: every module invariant, evaluated on seeded random instances.

#include "ilse/backward_error.hpp"
#include "ilse/harness.hpp"
#include "ilse/oracle.hpp"
#include "ilse/solver.hpp"
#include "ilse/testgen.hpp"

#include "json.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace ilse {

namespace {

constexpr double kU = std::numeric_limits<double>::epsilon() / 2.0;

// Outcome of one property evaluation on one instance.
enum class Outcome { Pass, Fail, Skip };

struct Case {
  IlseProblem original;
  IlseSolution x;
  PerturbationQuadruple pert;
  IlseSolution y;  // solution of the perturbed problem
};

GenParams small_params(std::uint64_t seed) {
  GenParams g;
  g.m = 12, g.n = 6, g.s = 3, g.p = 7, g.q = 5;
  g.kappa_A = 10.0, g.kappa_B = 10.0;
  g.seed = seed;
  return g;
}

GenParams paper_params(std::uint64_t seed, double kappa_A, double kappa_B) {
  GenParams g;
  g.kappa_A = kappa_A, g.kappa_B = kappa_B;
  g.seed = seed;
  return g;
}

Case make_case(const GenParams& params, double eps) {
  Case c;
  c.original = gen_ilse_instance(params).problem;
  c.x = solve_ilse(c.original);
  c.pert = gen_perturbation(c.original, eps, derive_seed(params.seed, 0xca5e));
  c.y = solve_augmented(perturbed(c.original, c.pert));
  return c;
}

Vector random_xi(const Vector& center, std::uint64_t seed) {
  return center + (1.0 + center.norm()) * gen_gaussian_vector(center.size(), seed);
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

class Runner {
 public:
  explicit Runner(const VerifyOptions& options) : opt_(options) {}

  // Evaluates `fn(k)` for k = 0..count-1; exceptions count as failures.
  void run(const std::string& module, const std::string& name, int count,
           const std::function<Outcome(int)>& fn, const std::string& skip_note = {}) {
    PropertyResult res{module, name, 0, 0, 0, {}};
    std::string first_failure;
    for (int k = 0; k < count; ++k) {
      Outcome o;
      try {
        o = fn(k);
      } catch (const std::exception& e) {
        o = Outcome::Fail;
        if (first_failure.empty()) first_failure = e.what();
      }
      if (o == Outcome::Skip) {
        ++res.skipped;
        continue;
      }
      ++res.checked;
      if (o == Outcome::Pass) ++res.passed;
      else if (first_failure.empty()) first_failure = "instance " + std::to_string(k);
    }
    if (!first_failure.empty()) res.note = "first failure: " + first_failure;
    else if (res.skipped > 0) res.note = skip_note;
    report_.properties.push_back(std::move(res));
  }

  std::uint64_t seed(std::uint64_t property, int k) const {
    return derive_seed(opt_.seed, (property << 32) ^ static_cast<std::uint64_t>(k));
  }
  int instances() const { return opt_.instances; }
  const VerifyOptions& options() const { return opt_; }
  VerifyReport take() { return std::move(report_); }

 private:
  VerifyOptions opt_;
  VerifyReport report_;
};

Outcome check(bool ok) { return ok ? Outcome::Pass : Outcome::Fail; }

void testgen_properties(Runner& R) {
  const int N = R.instances();
  R.run("testgen", "sigma_orthogonality", N, [&](int k) {
    const Matrix Q = gen_sigma_orthogonal(60, 40, R.seed(1, k), 2.0);
    const SignatureMatrix S(60, 40);
    const double res = (Q.transpose() * S.apply_rows(Q) - S.dense()).cwiseAbs().maxCoeff();
    return check(res <= 1e-12 * 100);
  });
  R.run("testgen", "generators_pure", N, [&](int k) {
    const GenParams g = small_params(R.seed(2, k));
    const IlseProblem a = gen_ilse_instance(g).problem, b = gen_ilse_instance(g).problem;
    const PerturbationQuadruple pa = gen_perturbation(a, 1e-3, g.seed), pb = gen_perturbation(b, 1e-3, g.seed);
    return check(bitwise_equal(a.A, b.A) && bitwise_equal(a.b, b.b) && bitwise_equal(a.B, b.B) &&
                 bitwise_equal(a.d, b.d) && bitwise_equal(pa.E, pb.E) && bitwise_equal(pa.F, pb.F) &&
                 bitwise_equal(pa.f, pb.f) && bitwise_equal(pa.g, pb.g));
  });
  R.run("testgen", "geometric_ladder_decreasing", N, [&](int k) {
    const Index cols = 2 + k % 40;
    const double kappa = std::pow(10.0, 0.1 + 0.5 * (k % 17));
    const Vector d = gen_geometric_diagonal(cols + 3, cols, kappa).diagonal();
    for (Index i = 1; i < cols; ++i)
      if (!(d(i) < d(i - 1))) return Outcome::Fail;
    return Outcome::Pass;
  });
  R.run("testgen", "instances_well_posed", N, [&](int k) {
    const double kappas[] = {1e2, 1e4, 1e8};
    const GenParams g = paper_params(R.seed(4, k), kappas[k % 3], kappas[(k / 3) % 3]);
    return check(check_well_posedness(gen_ilse_instance(g).problem).well_posed());
  });
}

void solver_properties(Runner& R) {
  const int N = R.instances();
  R.run("solver", "augmented_matrix_symmetric", N, [&](int k) {
    const AugmentedSystem sys = assemble_augmented(gen_ilse_instance(paper_params(R.seed(10, k), 1e4, 1e4)).problem);
    return check(bitwise_equal(sys.K, sys.K.transpose()));
  });
  R.run("solver", "augmented_residual", N, [&](int k) {
    const IlseProblem P = gen_ilse_instance(paper_params(R.seed(11, k), 1e2, 1e2)).problem;
    return check(augmented_residual(P, solve_ilse(P)) <= 1e-12);
  });
  // The absolute form holds while |xi| stays moderate. For kappa_B near 1e6
  // the multiplier reaches 1e9-1e10 and merely evaluating B^T xi rounds at
  // u |B| |xi|, so the full range is checked against a bound that carries
  // the solution's own scale.
  auto normal_residuals = [&](std::uint64_t property, int k, bool scaled) {
    const double kappas[] = {1e2, 1e4, 1e6};
    const int kb = scaled ? (k / 3) % 3 : (k / 3) % 2;
    const IlseProblem P = gen_ilse_instance(paper_params(R.seed(property, k), kappas[k % 3], kappas[kb])).problem;
    const IlseSolution sol = solve_ilse(P);
    const auto [r1, r2] = normal_equation_residuals(P, sol.x, sol.xi);
    const double res = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
    double scale = P.A.norm() * P.b.norm() + P.B.norm();
    if (scaled) scale += P.B.norm() * sol.xi.norm() + P.A.squaredNorm() * sol.x.norm();
    return check(res <= 1e-10 * scale);
  };
  R.run("solver", "normal_equation_residuals", N, [&](int k) { return normal_residuals(12, k, false); });
  R.run("solver", "normal_equation_residuals_scaled", N, [&](int k) { return normal_residuals(14, k, true); });
  R.run("solver", "solve_deterministic", N, [&](int k) {
    const IlseProblem P = gen_ilse_instance(paper_params(R.seed(13, k), 1e4, 1e4)).problem;
    const IlseSolution a = solve_ilse(P), b = solve_ilse(P);
    return check(bitwise_equal(a.x, b.x) && bitwise_equal(a.xi, b.xi) && bitwise_equal(a.r, b.r));
  });
}

void backward_error_properties(Runner& R) {
  const int N = R.instances();
  const WeightScheme w;
  const bool fault = R.options().inject_j_sign_fault;

  // The last instance is consistent (b = A y, d = B y): r_y = 0 and the
  // full-row-rank theorem does not apply.
  R.run(
      "backward_error", "full_row_rank", N + 1,
      [&](int k) {
        Case c = make_case(small_params(R.seed(20, k)), 1e-6);
        Vector y = c.y.x;
        if (k == N) {
          c.original.b = c.original.A * y;
          c.original.d = c.original.B * y;
        }
        if ((c.original.b - c.original.A * y).norm() == 0.0) return Outcome::Skip;
        const Vector xi1 = xi_one(c.original, y);
        for (int j = 0; j < 10; ++j) {
          const Matrix J = assemble_J(c.original, y, random_xi(xi1, R.seed(21, 10 * k + j)), w).J;
          Eigen::JacobiSVD<Matrix> svd(J);
          const Vector& sv = svd.singularValues();
          if (!(sv(sv.size() - 1) > kFullRowRankTolerance * sv(0))) return Outcome::Fail;
        }
        return Outcome::Pass;
      },
      "precondition unmet (r_y = 0)");

  R.run("backward_error", "min_norm_consistency", N, [&](int k) {
    const Case c = make_case(small_params(R.seed(22, k)), 1e-4);
    const Vector xi = random_xi(xi_one(c.original, c.y.x), R.seed(23, k));
    const Matrix J = assemble_J(c.original, c.y.x, xi, w).J;
    const Vector rhs = rhs_vector(c.original, c.y.x, xi);
    const MinNormSolve sol = min_norm_solve(J, rhs);
    if (!((J * sol.z - rhs).norm() <= 1e-10 * (J.norm() * sol.z.norm() + rhs.norm()))) return Outcome::Fail;
    if (std::abs(sol.z.norm() - rho_at(c.original, c.y.x, xi, w)) > 1e-12 * sol.z.norm()) return Outcome::Fail;
    for (int j = 0; j < 5; ++j) {
      // Strip the row-space component of a random vector to land in null(J).
      const Vector v = gen_gaussian_vector(J.cols(), R.seed(24, 5 * k + j));
      const Vector null_part = v - min_norm_solve(J, J * v).z;
      if ((sol.z + null_part).norm() < sol.z.norm() * (1.0 - 1e-12)) return Outcome::Fail;
    }
    return Outcome::Pass;
  });

  R.run("backward_error", "xi1_optimality", N, [&](int k) {
    const Case c = make_case(small_params(R.seed(25, k)), 1e-4);
    const Vector xi1 = xi_one(c.original, c.y.x);
    const double best = rhs_vector(c.original, c.y.x, xi1).norm();
    for (int j = 0; j < 100; ++j) {
      const Vector step = (1.0 + xi1.norm()) * std::pow(10.0, (j % 7) - 5) *
                          gen_gaussian_vector(xi1.size(), R.seed(26, 100 * k + j));
      if (rhs_vector(c.original, c.y.x, xi1 + step).norm() < best * (1.0 - 1e-12)) return Outcome::Fail;
    }
    return Outcome::Pass;
  });

  R.run("backward_error", "tau0_svd_equivalence", N, [&](int k) {
    const Case c = make_case(small_params(R.seed(27, k)), 1e-3);
    const WeightScheme wk{std::pow(10.0, k % 3 - 1), 1.0, std::pow(10.0, (k / 3) % 3 - 1)};
    const Vector& y = c.y.x;
    // The xi-free matrix, cut out of the assembled J by zeroing the F block.
    Matrix M = detail::assemble_J(c.original, y, xi_one(c.original, y), wk, {fault}).J;
    const auto blk = LinearizationOperator::layout(c.original.m(), c.original.n(), c.original.s());
    M.middleCols(blk.F, blk.g - blk.F).setZero();
    Eigen::JacobiSVD<Matrix> svd(M);
    const double direct = 1.0 / svd.singularValues()(svd.singularValues().size() - 1);
    const double tau0 = tau_zero(c.original, y, wk);
    return check(std::abs(tau0 - direct) <= 1e-8 * direct);
  });

  R.run("backward_error", "alpha_lower_bound", N, [&](int k) {
    const Case c = make_case(small_params(R.seed(28, k)), 1e-3);
    const WeightScheme wk{std::pow(10.0, k % 3 - 1), 1.0, 1.0};
    return check(alpha(c.original, c.y.x, wk) >= alpha_lower_bound(c.original, c.y.x, wk) * (1.0 - 1e-12));
  });

  R.run("backward_error", "lower_bound_consistency", N, [&](int k) {
    const GenParams g = small_params(R.seed(29, k));
    const IlseProblem P = gen_ilse_instance(g).problem;
    const IlseSolution x = solve_ilse(P);
    const double eps = std::pow(10.0, -3.0 - k % 6);
    const Vector y = solve_augmented(perturbed(P, gen_perturbation(P, eps, g.seed))).x;
    const PerturbationQuadruple pert = construct_feasible_perturbation(P, y, x.xi, eps, derive_seed(g.seed, 1));
    const double mu1 = weighted_perturbation_norm(pert, w);
    const double bound = mu1 + tau_zero(P, y, w) * bound_constant(y, w) * mu1 * mu1;
    return check(rho_at(P, y, x.xi, w) <= bound * (1.0 + 1e-8));
  });

  R.run("backward_error", "distance_bound", N, [&](int k) {
    const Case c = make_case(small_params(R.seed(30, k)), std::pow(10.0, -2.0 - k % 7));
    return check(solution_distance_lower_bound(c.original, c.y.x) <= (c.x.x - c.y.x).norm());
  });

  R.run("backward_error", "bound_map_monotone", N, [&](int k) {
    const Vector u = gen_gaussian_vector(4, R.seed(31, k)).cwiseAbs();
    const double tau0 = std::exp(u(0)), c = std::exp(u(1));
    const double t1 = std::pow(10.0, -8.0 + 8.0 * std::tanh(u(2)));
    const double t2 = t1 * (1.0 + u(3));
    return check(lower_bound_map(0.0, tau0, c) == 0.0 && lower_bound_map(t1, tau0, c) <= lower_bound_map(t2, tau0, c));
  });
}

void oracle_properties(Runner& R) {
  const int N = std::max(1, R.instances() / 4);
  const WeightScheme w;
  auto tiny = [&](int k) {
    GenParams g = small_params(R.seed(40, k));
    g.m = 8, g.n = 4, g.s = 2, g.p = 5, g.q = 3;
    return make_case(g, 1e-3);
  };
  R.run("oracle", "rho_star_not_above_starts", N, [&](int k) {
    const Case c = tiny(k);
    MinimizeOptions opt;
    opt.seed = R.seed(41, k);
    opt.xi0 = c.x.xi;
    opt.max_evals = 150;
    const MinimizeResult res = minimize_rho(c.original, c.y.x, w, opt);
    return check(res.rho_star <= rho_at(c.original, c.y.x, xi_one(c.original, c.y.x), w) &&
                 res.rho_star <= rho_at(c.original, c.y.x, c.x.xi, w));
  });
  R.run("oracle", "minimize_reproducible", N, [&](int k) {
    const Case c = tiny(k);
    MinimizeOptions opt;
    opt.seed = R.seed(42, k);
    opt.max_evals = 100;
    const MinimizeResult a = minimize_rho(c.original, c.y.x, w, opt);
    const MinimizeResult b = minimize_rho(c.original, c.y.x, w, opt);
    return check(bitwise_equal(a.xi_star, b.xi_star) && a.rho_star == b.rho_star && a.iterations == b.iterations);
  });
}

void harness_properties(Runner& R) {
  const int N = std::max(1, R.instances() / 2);
  const WeightScheme w;
  R.run("harness", "eps_scaling", N, [&](int k) {
    const GenParams g = small_params(0);
    const std::uint64_t seed = R.seed(50, k);
    const double eps[] = {1e-6, 1e-8, 1e-10};
    double rho[3];
    for (int i = 0; i < 3; ++i) {
      const ExperimentRow row = run_trial(g, eps[i], w, seed);
      if (row.failed) throw Error(ErrorCode::NotWellPosed, row.failure);
      rho[i] = row.rho_xi1;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        const double ratio = (rho[i] / rho[j]) / (eps[i] / eps[j]);
        if (!(ratio >= 0.1 && ratio <= 10.0)) return Outcome::Fail;
      }
    return Outcome::Pass;
  });
  R.run("harness", "mu_one_matches_weighted_norm", N, [&](int k) {
    const IlseProblem P = gen_ilse_instance(small_params(R.seed(51, k))).problem;
    const PerturbationQuadruple pert = gen_perturbation(P, 1e-6, R.seed(52, k));
    const double a = mu_one(pert), b = weighted_perturbation_norm(pert, w);
    return check(std::abs(a - b) <= 4 * kU * b);
  });
  R.run("harness", "csv_round_trip", N, [&](int k) {
    ExperimentConfig cfg;
    cfg.m = 12, cfg.n = 6, cfg.s = 3, cfg.p = 7, cfg.q = 5;
    cfg.kappa_A_list = {10.0};
    cfg.kappa_B_list = {10.0, 1e3};
    cfg.eps_list = {1e-6};
    cfg.base_seed = R.seed(53, k);
    ExperimentResult res = run_experiment(cfg);
    const std::string text = format_csv(res);
    ExperimentResult back;
    back.rows = parse_csv(text);
    back.cells = res.cells;
    return check(format_csv(back) == text && back.rows.size() == res.rows.size());
  });
  R.run("harness", "row_replay_from_seed", N, [&](int k) {
    const GenParams g = small_params(0);
    const std::uint64_t seed = R.seed(54, k);
    const ExperimentRow a = run_trial(g, 1e-6, w, seed), b = run_trial(g, 1e-6, w, seed);
    return check(!a.failed && a.rho_xi1 == b.rho_xi1 && a.mu_1 == b.mu_1 && a.gamma == b.gamma &&
                 a.gamma_bar == b.gamma_bar && a.tau0 == b.tau0 && a.kappa_A == b.kappa_A);
  });
}

}  // namespace

bool VerifyReport::ok() const {
  for (const PropertyResult& p : properties)
    if (!p.ok()) return false;
  return true;
}

std::string VerifyReport::to_text() const {
  std::ostringstream os;
  int failed = 0;
  for (const PropertyResult& p : properties) {
    os << (p.ok() ? "PASS " : "FAIL ") << p.module << '.' << p.name << "  " << p.passed << '/' << p.checked;
    if (p.skipped) os << " (skipped " << p.skipped << ')';
    if (!p.note.empty()) os << "  " << p.note;
    os << '\n';
    failed += !p.ok();
  }
  os << (failed ? std::to_string(failed) + " properties failed" : "all properties passed") << '\n';
  return os.str();
}

std::string VerifyReport::to_json_text() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const PropertyResult& p : properties)
    arr.push_back({{"module", p.module},
                   {"name", p.name},
                   {"checked", p.checked},
                   {"passed", p.passed},
                   {"skipped", p.skipped},
                   {"ok", p.ok()},
                   {"note", p.note}});
  return nlohmann::json{{"ok", ok()}, {"properties", arr}}.dump(2) + "\n";
}

VerifyReport verify_suite(const VerifyOptions& options) {
  if (options.instances < 1) throw Error(ErrorCode::InvalidArgument, "instances must be >= 1");
  Runner R(options);
  testgen_properties(R);
  solver_properties(R);
  backward_error_properties(R);
  oracle_properties(R);
  harness_properties(R);
  return R.take();
}

}  // namespace ilse
