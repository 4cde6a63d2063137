// Acceptance run: one PASS/FAIL line per criterion, indented detail below it.
//
//   acceptance [--criterion K] [--cli PATH] [--jobs J]
//
// Exit status is 0 only if every selected criterion passes.

#include "ilse/backward_error.hpp"
#include "ilse/harness.hpp"
#include "ilse/oracle.hpp"
#include "ilse/solver.hpp"
#include "ilse/testgen.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace ilse;

namespace {

struct Options {
  int only = 0;
  std::string cli;
  int jobs = 0;
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> detail;

  void note(const char* fmt, auto... args) {
    if constexpr (sizeof...(args) == 0) {
      detail.emplace_back(fmt);
    } else {
      char buf[512];
      std::snprintf(buf, sizeof buf, fmt, args...);
      detail.emplace_back(buf);
    }
  }
  void require(bool ok, const char* fmt, auto... args) {
    if (!ok) {
      pass = false;
      note(fmt, args...);
    }
  }
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

// Small random instance with m <= max_m, n <= max_n, s <= max_s, drawn until
// well posed.
IlseProblem small_instance(std::mt19937_64& rng, Index max_m, Index max_n, Index max_s, std::uint64_t seed) {
  for (;;) {
    GenParams g;
    g.n = std::uniform_int_distribution<Index>(2, max_n)(rng);
    g.s = std::uniform_int_distribution<Index>(1, std::min(max_s, g.n - 1))(rng);
    g.m = std::uniform_int_distribution<Index>(g.n + 1, max_m)(rng);
    // A p >= n positive part leaves room for A^T S A to be definite on N(B).
    g.p = std::uniform_int_distribution<Index>(g.n, g.m - 1)(rng);
    g.q = g.m - g.p;
    g.kappa_A = std::pow(10.0, std::uniform_real_distribution<double>(0, 4)(rng));
    g.kappa_B = std::pow(10.0, std::uniform_real_distribution<double>(0, 3)(rng));
    g.seed = seed++;
    try {
      IlseProblem P = gen_ilse_instance(g).problem;
      if (check_well_posedness(P).well_posed()) return P;
    } catch (const Error&) {
      // the generator gave up on this draw; take another
    }
  }
}

WeightScheme random_weights(std::mt19937_64& rng) {
  static const double choices[] = {0.1, 1.0, 10.0};
  std::uniform_int_distribution<int> pick(0, 2);
  return {choices[pick(rng)], choices[pick(rng)], choices[pick(rng)]};
}

Vector perturbed_solution(const IlseProblem& P, double eps, std::uint64_t seed) {
  return solve_augmented(perturbed(P, gen_perturbation(P, eps, seed))).x;
}

// --- 1 and 2: the full-size grid ---------------------------------------------

const ExperimentResult& paper_grid(const Options& opt) {
  static const ExperimentResult result = [&] {
    ExperimentConfig c;
    c.kappa_A_list = {1e2, 1e4, 1e8};
    c.kappa_B_list = {1e2, 1e4, 1e6, 1e8};
    c.eps_list = {1e-6, 1e-12};
    c.trials_per_cell = 5;
    c.base_seed = 1;
    c.jobs = opt.jobs > 0 ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
    return run_experiment(c);
  }();
  return result;
}

Outcome magnitudes(const Options& opt) {
  Outcome out;
  const ExperimentResult& res = paper_grid(opt);
  const double scale = std::sqrt(100.0 * 50 + 100 + 20 * 50 + 20);
  std::map<std::tuple<double, double, double>, std::vector<const ExperimentRow*>> cells;
  for (const ExperimentRow& r : res.rows) cells[{r.eps, r.kappa_B, r.kappa_A_nominal}].push_back(&r);
  for (const auto& [key, rows] : cells) {
    const auto [eps, kB, kA] = key;
    std::vector<double> mu, rho, rho_bar;
    int failed = 0;
    for (const ExperimentRow* r : rows) {
      if (r->failed) {
        ++failed;
        rho.push_back(INFINITY);
        rho_bar.push_back(INFINITY);
        continue;
      }
      mu.push_back(r->mu_1);
      rho.push_back(r->rho_xi1 / eps);
      rho_bar.push_back(r->rho_xi_bar / eps);
    }
    const double mu_med = mu.empty() ? NAN : median(mu);
    const double rho_med = median(rho);
    const bool mu_ok = !mu.empty() && mu_med >= 0.5 * 130 * eps && mu_med <= 2 * 130 * eps &&
                       mu_med >= 0.5 * scale * eps && mu_med <= 2 * scale * eps;
    const bool rho_ok = rho_med >= 1.0 && rho_med <= 1e3;
    out.pass = out.pass && mu_ok && rho_ok;
    out.note("%s eps=%.0e kappa_B=%.0e kappa_A=%.0e  median mu_1/eps=%.1f  median rho(xi1)/eps=%.3g  "
             "[median rho(xi_bar)/eps=%.3g]  failed=%d",
             mu_ok && rho_ok ? "ok  " : "MISS", eps, kB, kA, mu_med / eps, rho_med, median(rho_bar), failed);
  }
  out.note("mu_1 window: [0.5, 2] x both 130 eps and eps sqrt(mn+m+sn+s) = %.1f eps", scale);
  return out;
}

Outcome residual_envelope(const Options& opt) {
  Outcome out;
  double worst = 0.0;
  int checked = 0;
  for (const ExperimentRow& r : paper_grid(opt).rows) {
    if (r.kappa_B > 1e6) continue;
    ++checked;
    out.require(!r.failed, "row failed: eps=%.0e kappa_A=%.0e kappa_B=%.0e: %s", r.eps, r.kappa_A_nominal,
                r.kappa_B, r.failure.c_str());
    if (r.failed) continue;
    worst = std::max({worst, r.gamma, r.gamma_bar});
    out.require(r.gamma <= 1e-10 && r.gamma_bar <= 1e-10, "gamma=%.3e gamma_bar=%.3e at seed %llu", r.gamma,
                r.gamma_bar, static_cast<unsigned long long>(r.seed));
  }
  out.note("%d rows with kappa_B <= 1e6, max(gamma, gamma_bar) = %.3e", checked, worst);
  return out;
}

// --- 3: tau0 against the SVD of the xi-free matrix ----------------------------

Outcome tau0_equivalence(const Options&) {
  Outcome out;
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const IlseProblem P = small_instance(rng, 12, 6, 3, 3000 + 100 * k);
    const WeightScheme w = random_weights(rng);
    const Vector y = perturbed_solution(P, 1e-3, k);
    Matrix M = oracle::kron_J(P, y, Vector::Zero(P.s()), w);
    const auto blocks = LinearizationOperator::layout(P.m(), P.n(), P.s());
    M.middleCols(blocks.F, P.n() * P.s()).setZero();
    const double svd = oracle::pinv_norm(M);
    const double rel = std::abs(tau_zero(P, y, w) - svd) / svd;
    worst = std::max(worst, rel);
    out.require(rel <= 1e-8, "instance %d: relative error %.3e", k, rel);
  }
  out.note("100 instances, worst relative error %.3e", worst);
  return out;
}

// --- 4: alpha lower bound -------------------------------------------------------

Outcome alpha_bound(const Options&) {
  Outcome out;
  std::mt19937_64 rng(4);
  const double thetas[] = {0.1, 1.0, 10.0};
  double tightest = INFINITY;
  int count = 0;
  for (int k = 0; k < 1000; ++k) {
    const IlseProblem P = small_instance(rng, 30, 12, 5, 40000 + 100 * k);
    WeightScheme w;
    w.theta1 = thetas[k % 3];
    const Vector y = gen_gaussian_vector(P.n(), 50000 + k);
    if ((P.b - P.A * y).norm() == 0.0) continue;
    ++count;
    const double a = alpha(P, y, w), lo = alpha_lower_bound(P, y, w);
    tightest = std::min(tightest, a / lo);
    out.require(a >= lo * (1 - 1e-12), "instance %d: alpha=%.17g < lower=%.17g", k, a, lo);
  }
  out.note("%d instances, min alpha / lower bound = %.6f", count, tightest);
  return out;
}

// --- 5 and 6: constructed perturbations ----------------------------------------

struct Constructed {
  IlseProblem P;
  IlseSolution x;
  Vector y;  // perturbed solve, the candidate throughout
  PerturbationQuadruple pert;
  WeightScheme w;
};

const std::vector<Constructed>& constructed() {
  static const std::vector<Constructed> all = [] {
    std::vector<Constructed> v;
    std::mt19937_64 rng(5);
    const double eps_list[] = {1e-3, 1e-6, 1e-9};
    for (int k = 0; k < 200; ++k) {
      Constructed c;
      c.P = small_instance(rng, 30, 12, 5, 70000 + 100 * k);
      c.w = random_weights(rng);
      c.x = solve_ilse(c.P);
      const double eps = eps_list[k % 3];
      c.y = perturbed_solution(c.P, eps, k);
      c.pert = construct_feasible_perturbation(c.P, c.y, c.x.xi, eps, derive_seed(k, 5));
      v.push_back(std::move(c));
    }
    return v;
  }();
  return all;
}

Outcome lower_bound_consistency(const Options&) {
  Outcome out;
  double worst = 0.0;
  for (std::size_t k = 0; k < constructed().size(); ++k) {
    const Constructed& c = constructed()[k];
    const double mu1 = weighted_perturbation_norm(c.pert, c.w);
    const double rho = rho_at(c.P, c.y, c.x.xi, c.w);
    const double bound = (mu1 + tau_zero(c.P, c.y, c.w) * bound_constant(c.y, c.w) * mu1 * mu1) * (1 + 1e-8);
    worst = std::max(worst, rho / bound);
    out.require(rho <= bound, "instance %zu: rho(xi0)=%.6e > %.6e", k, rho, bound);
  }
  out.note("200 constructed instances, max rho(xi0) / bound = %.4f", worst);
  return out;
}

Outcome distance_bound(const Options&) {
  Outcome out;
  double worst = 0.0;
  for (std::size_t k = 0; k < constructed().size(); ++k) {
    const Constructed& c = constructed()[k];
    const double lo = solution_distance_lower_bound(c.P, c.y);
    const double dist = (c.x.x - c.y).norm();
    if (dist > 0) worst = std::max(worst, lo / dist);
    out.require(lo <= dist, "instance %zu: bound %.6e > distance %.6e", k, lo, dist);
  }
  out.note("200 instances, max bound / distance = %.4f", worst);
  return out;
}

// --- 7: optimizer against xi1 and an exhaustive grid -----------------------------

Outcome oracle_gap(const Options&) {
  Outcome out;
  std::mt19937_64 rng(7);
  double best_gain = 1.0;
  for (int k = 0; k < 50; ++k) {
    const IlseProblem P = small_instance(rng, 16, 8, 5, 90000 + 100 * k);
    const Vector y = perturbed_solution(P, 1e-4, k);
    MinimizeOptions mo;
    mo.seed = k;
    const MinimizeResult res = minimize_rho(P, y, {}, mo);
    const double r1 = rho_at(P, y, xi_one(P, y), {});
    best_gain = std::min(best_gain, res.rho_star / r1);
    out.require(res.rho_star <= r1, "instance %d: rho_star %.6e > rho(xi1) %.6e", k, res.rho_star, r1);
  }
  out.note("50 instances, smallest rho_star / rho(xi1) = %.4f", best_gain);

  const IlseProblem T1 = oracle::t1();
  for (double yv : {0.05, 0.1, 0.2, 0.5}) {
    const Vector y = Vector::Constant(1, yv);
    double grid = INFINITY;
    for (int i = 0; i <= 40000; ++i) {
      const Vector xi = Vector::Constant(1, -1.0 + 1e-4 * i);
      grid = std::min(grid, oracle::min_norm(oracle::kron_J(T1, y, xi, {}), oracle::rhs(T1, y, xi)));
    }
    const double star = minimize_rho(T1, y, {}).rho_star;
    out.require(std::abs(star - grid) <= 1e-3, "T1 y=%g: rho_star %.6e vs grid %.6e", yv, star, grid);
    out.note("T1 y=%g: rho_star=%.8f grid=%.8f", yv, star, grid);
  }
  return out;
}

// --- 8: the hand-checked micro instance ------------------------------------------

Outcome micro_instance(const Options&) {
  Outcome out;
  const IlseProblem P = oracle::t1();
  const IlseSolution sol = solve_ilse(P);
  out.require(std::abs(sol.x(0)) <= 1e-15 && std::abs(sol.xi(0) - 1.0) <= 1e-15, "solve: x=%.17g xi=%.17g",
              sol.x(0), sol.xi(0));
  const Vector y = Vector::Constant(1, 0.1);
  const BackwardErrorReport rep = backward_error_bounds(P, y, std::nullopt, {});
  const double hand_rho = std::sqrt(0.01 * 3.45 / (3.45 * 1.01 - 0.0081));
  const double oracle_rho = oracle::min_norm(oracle::kron_J(P, y, rep.xi1, {}), oracle::rhs(P, y, rep.xi1));
  out.require(std::abs(rep.xi1(0) - 0.9) <= 1e-12, "xi1 = %.17g", rep.xi1(0));
  out.require(std::abs(rep.rho_xi1 - 0.09962) <= 1e-4 && std::abs(rep.rho_xi1 - oracle_rho) <= 1e-12,
              "rho(xi1) = %.17g, oracle %.17g", rep.rho_xi1, oracle_rho);
  out.require(std::abs(rep.alpha - std::sqrt(2.64)) <= 1e-12, "alpha = %.17g", rep.alpha);
  out.require(std::abs(rep.tau0 - 1.0) <= 1e-12, "tau0 = %.17g", rep.tau0);
  out.require(std::abs(rep.distance_lower - 0.1 / std::sqrt(2.0)) <= 1e-12 && rep.distance_lower <= 0.1,
              "distance bound = %.17g", rep.distance_lower);
  out.note("xi1=%.15f rho(xi1)=%.10f (normal equations %.10f) alpha=%.15f tau0=%.15f distance=%.10f", rep.xi1(0),
           rep.rho_xi1, hand_rho, rep.alpha, rep.tau0, rep.distance_lower);
  return out;
}

// --- 9: full row rank of J -----------------------------------------------------

Outcome full_row_rank(const Options&) {
  Outcome out;
  std::mt19937_64 rng(9);
  double worst = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const IlseProblem P = small_instance(rng, 30, 12, 5, 120000 + 100 * k);
    const WeightScheme w = random_weights(rng);
    const Vector y = gen_gaussian_vector(P.n(), 130000 + k);
    if ((P.b - P.A * y).norm() == 0.0) continue;
    for (int j = 0; j < 10; ++j) {
      const Vector xi = gen_gaussian_vector(P.s(), 140000 + 10 * k + j) * std::pow(10.0, j % 4);
      const Vector sv = Eigen::JacobiSVD<Matrix>(assemble_J(P, y, xi, w).J).singularValues();
      const double ratio = sv(sv.size() - 1) / sv(0);
      worst = std::min(worst, ratio);
      out.require(ratio > kFullRowRankTolerance, "instance %d xi %d: sigma ratio %.3e", k, j, ratio);
    }
  }
  out.note("1000 (instance, xi) pairs, min sigma_min / sigma_max = %.3e", worst);
  return out;
}

// --- 10: byte-identical CLI runs -----------------------------------------------

Outcome determinism(const Options& opt) {
  Outcome out;
  if (opt.cli.empty()) {
    out.require(false, "no --cli path given");
    return out;
  }
  const auto dir = std::filesystem::temp_directory_path() / "ilse_acceptance_det";
  std::filesystem::create_directories(dir);
  const std::string args =
      " experiment --kappa-a 1e2,1e8 --kappa-b 1e2,1e6 --eps 1e-6,1e-12 --trials 2 --seed 11 --jobs 4 --out ";
  std::string text[2];
  for (int i = 0; i < 2; ++i) {
    const auto file = dir / ("run" + std::to_string(i) + ".csv");
    const int rc = std::system(("\"" + opt.cli + "\"" + args + "\"" + file.string() + "\"").c_str());
    out.require(rc == 0, "run %d exited with %d", i, rc);
    std::ifstream in(file, std::ios::binary);
    text[i].assign(std::istreambuf_iterator<char>(in), {});
  }
  out.require(!text[0].empty() && text[0] == text[1], "outputs differ (%zu vs %zu bytes)", text[0].size(),
              text[1].size());
  out.note("two runs, %zu bytes each, identical: %s", text[0].size(), text[0] == text[1] ? "yes" : "no");
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) opt.only = std::atoi(argv[++i]);
    else if (a == "--cli" && i + 1 < argc) opt.cli = argv[++i];
    else if (a == "--jobs" && i + 1 < argc) opt.jobs = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--criterion K] [--cli PATH] [--jobs J]\n", argv[0]);
      return 2;
    }
  }

  struct Criterion {
    const char* name;
    std::function<Outcome(const Options&)> run;
  };
  const Criterion criteria[] = {
      {"magnitude reproduction on the full-size grid", magnitudes},
      {"residual envelope gamma, gamma_bar <= 1e-10 (kappa_B <= 1e6)", residual_envelope},
      {"tau0 equals |M^+|_2 to 1e-8", tau0_equivalence},
      {"alpha >= alpha lower bound", alpha_bound},
      {"lower-bound consistency on constructed perturbations", lower_bound_consistency},
      {"distance lower bound <= |x - y|", distance_bound},
      {"optimizer never above xi1; micro family matches grid to 1e-3", oracle_gap},
      {"micro instance hand values", micro_instance},
      {"J(xi) full row rank", full_row_rank},
      {"byte-identical experiment output", determinism},
  };

  int failed = 0;
  for (int k = 1; k <= 10; ++k) {
    if (opt.only && opt.only != k) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1].run(opt);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note("exception: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", k, criteria[k - 1].name, secs);
    const std::size_t limit = 40;
    for (std::size_t i = 0; i < o.detail.size() && i < limit; ++i) std::printf("    %s\n", o.detail[i].c_str());
    if (o.detail.size() > limit) std::printf("    ... %zu more\n", o.detail.size() - limit);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
