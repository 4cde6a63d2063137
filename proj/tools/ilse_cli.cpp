// ilse: command-line front end over the C API.
//
//   ilse gen --out DIR [--eps E]          write a (perturbed) generated problem
//   ilse solve --problem DIR              solution, multipliers and residuals
//   ilse backward-error --problem DIR --y FILE [--xi0 FILE]
//   ilse experiment [--config FILE] ...   Table-style experiment
//   ilse verify                           property suite
//
// Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 property failure.

#include "ilse/ilse.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitProperty = 3;

int exit_code(ilse_status st) {
  switch (st) {
    case ILSE_OK: return 0;
    case ILSE_ERR_NOT_WELL_POSED:
    case ILSE_ERR_PRECONDITION:
    case ILSE_ERR_RANK_DEFICIENT:
    case ILSE_ERR_INFINITE_TAU:
    case ILSE_ERR_INTERNAL: return kExitNumerical;
    case ILSE_ERR_PROPERTY_FAILURE: return kExitProperty;
    default: return kExitUsage;
  }
}

struct Failure {
  int code;
};

void check(ilse_status st, const char* what) {
  if (st == ILSE_OK) return;
  std::cerr << "ilse: " << what << ": " << ilse_status_name(st) << ": " << ilse_last_error() << '\n';
  throw Failure{exit_code(st)};
}

struct ProblemDeleter {
  void operator()(ilse_problem* p) const { ilse_problem_free(p); }
};
struct SolutionDeleter {
  void operator()(ilse_solution* s) const { ilse_solution_free(s); }
};
struct StringDeleter {
  void operator()(char* s) const { ilse_string_free(s); }
};
using ProblemPtr = std::unique_ptr<ilse_problem, ProblemDeleter>;
using SolutionPtr = std::unique_ptr<ilse_solution, SolutionDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "ilse: cannot write '" << out_path << "'\n";
    throw Failure{kExitUsage};
  }
}

// Vector file: "rows 1" header, then the entries.
std::vector<double> read_vector(const std::string& path) {
  std::ifstream in(path);
  long long rows = -1, cols = -1;
  if (!in || !(in >> rows >> cols) || rows < 0 || cols != 1) {
    std::cerr << "ilse: '" << path << "' is not a vector file (header 'rows 1')\n";
    throw Failure{kExitUsage};
  }
  std::vector<double> v(static_cast<std::size_t>(rows));
  for (double& x : v)
    if (!(in >> x)) {
      std::cerr << "ilse: '" << path << "' ends early\n";
      throw Failure{kExitUsage};
    }
  return v;
}

void write_vector(const std::string& path, const std::vector<double>& v) {
  std::ostringstream os;
  os << v.size() << " 1\n";
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    os << buf;
  }
  emit(os.str(), path);
}

ProblemPtr load(const std::string& dir) {
  ilse_problem* p = nullptr;
  check(ilse_problem_load(dir.c_str(), &p), "loading problem");
  return ProblemPtr(p);
}

struct Dims {
  int64_t m = 100, n = 50, s = 20, p = 60, q = 40;
};

void add_dims(CLI::App* app, Dims& d) {
  app->add_option("--m", d.m, "rows of A")->capture_default_str();
  app->add_option("--n", d.n, "columns of A")->capture_default_str();
  app->add_option("--s", d.s, "rows of B")->capture_default_str();
  app->add_option("--p", d.p, "positive part of the signature")->capture_default_str();
  app->add_option("--q", d.q, "negative part of the signature")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indefinite least squares with equality constraints: solver and backward-error tools"};
  app.require_subcommand(1);

  // gen
  Dims gen_dims;
  double gen_kappa_a = 1e2, gen_kappa_b = 1e2, gen_eps = 0.0, gen_hyper = 1.0;
  uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Write a generated instance to a problem directory");
  add_dims(gen, gen_dims);
  gen->add_option("--kappa-a", gen_kappa_a, "nominal condition parameter of A")->capture_default_str();
  gen->add_option("--kappa-b", gen_kappa_b, "condition number of B")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--hyper-bound", gen_hyper, "max |angle| of hyperbolic rotations")->capture_default_str();
  gen->add_option("--eps", gen_eps, "also apply a seeded perturbation of this size")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();

  // solve
  std::string solve_problem, solve_out;
  bool solve_force = false;
  auto* solve = app.add_subcommand("solve", "Solve a problem through its augmented system");
  solve->add_option("--problem", solve_problem, "problem directory")->required();
  solve->add_option("--out", solve_out, "write x as a vector file");
  solve->add_flag("--no-check", solve_force, "skip the well-posedness check (stationary point only)");

  // backward-error
  std::string be_problem, be_y, be_xi0;
  double be_t1 = 1.0, be_t2 = 1.0, be_t3 = 1.0;
  auto* be = app.add_subcommand("backward-error", "Backward-error report for a candidate solution, as JSON");
  be->add_option("--problem", be_problem, "problem directory")->required();
  be->add_option("--y", be_y, "candidate solution (vector file)")->required();
  be->add_option("--xi0", be_xi0, "unperturbed multiplier (vector file)");
  be->add_option("--theta1", be_t1)->capture_default_str();
  be->add_option("--theta2", be_t2)->capture_default_str();
  be->add_option("--theta3", be_t3)->capture_default_str();

  // experiment
  Dims ex_dims;
  std::vector<double> ex_kappa_a, ex_kappa_b, ex_eps;
  int ex_trials = 1, ex_jobs = 1;
  uint64_t ex_seed = 0;
  double ex_t1 = 1.0, ex_t2 = 1.0, ex_t3 = 1.0;
  std::string ex_format = "csv", ex_out, ex_config;
  auto* ex = app.add_subcommand("experiment", "Run a perturbation experiment and write the table");
  ex->add_option("--config", ex_config, "JSON config; flags given explicitly override it");
  add_dims(ex, ex_dims);
  ex->add_option("--kappa-a", ex_kappa_a, "nominal kappa_A values")->delimiter(',');
  ex->add_option("--kappa-b", ex_kappa_b, "kappa_B values")->delimiter(',');
  ex->add_option("--eps", ex_eps, "perturbation magnitudes")->delimiter(',');
  ex->add_option("--trials", ex_trials, "trials per cell")->capture_default_str();
  ex->add_option("--seed", ex_seed, "base seed")->capture_default_str();
  ex->add_option("--theta1", ex_t1)->capture_default_str();
  ex->add_option("--theta2", ex_t2)->capture_default_str();
  ex->add_option("--theta3", ex_t3)->capture_default_str();
  ex->add_option("--format", ex_format, "csv, markdown or json")
      ->check(CLI::IsMember({"csv", "markdown", "json"}))
      ->capture_default_str();
  ex->add_option("--out", ex_out, "output file (default stdout)");
  ex->add_option("--jobs", ex_jobs, "worker threads; output does not depend on it")->capture_default_str();

  // verify
  int v_instances = 20;
  uint64_t v_seed = 20240601;
  bool v_fault = false;
  std::string v_format = "text", v_out;
  auto* ver = app.add_subcommand("verify", "Run the property suite");
  ver->add_option("--instances", v_instances, "instances per property")->capture_default_str();
  ver->add_option("--seed", v_seed)->capture_default_str();
  ver->add_option("--format", v_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  ver->add_option("--out", v_out, "output file (default stdout)");
  ver->add_flag("--inject-fault", v_fault, "flip a sign in J assembly (mutation check)")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      ilse_gen_params gp;
      ilse_gen_params_default(&gp);
      gp.m = gen_dims.m, gp.n = gen_dims.n, gp.s = gen_dims.s, gp.p = gen_dims.p, gp.q = gen_dims.q;
      gp.kappa_A = gen_kappa_a, gp.kappa_B = gen_kappa_b, gp.seed = gen_seed, gp.hyper_bound = gen_hyper;
      ilse_problem* raw = nullptr;
      double achieved = 0.0;
      check(ilse_generate(&gp, &raw, &achieved), "generating instance");
      ProblemPtr prob(raw);
      if (gen_eps > 0.0) {
        ilse_problem* shifted = nullptr;
        // Perturbation stream independent of the instance streams.
        check(ilse_problem_perturb(prob.get(), gen_eps, gen_seed ^ 0x9e3779b97f4a7c15ULL, &shifted),
              "perturbing instance");
        prob.reset(shifted);
      }
      check(ilse_problem_save(prob.get(), gen_out.c_str()), "saving problem");
      std::cout << nlohmann::json{{"out", gen_out}, {"achieved_kappa_A", achieved}, {"eps", gen_eps}}.dump()
                << '\n';
      return 0;
    }

    if (*solve) {
      ProblemPtr prob = load(solve_problem);
      int64_t n = 0, s = 0;
      check(ilse_problem_dims(prob.get(), nullptr, &n, &s, nullptr, nullptr), "reading dimensions");
      ilse_solution* raw = nullptr;
      check(solve_force ? ilse_solve_augmented(prob.get(), &raw) : ilse_solve(prob.get(), &raw), "solving");
      SolutionPtr sol(raw);
      std::vector<double> x(static_cast<std::size_t>(n)), xi(static_cast<std::size_t>(s));
      check(ilse_solution_x(sol.get(), x.data(), n), "reading x");
      check(ilse_solution_xi(sol.get(), xi.data(), s), "reading xi");
      double gamma = 0.0, r1 = 0.0, r2 = 0.0;
      check(ilse_solution_residuals(prob.get(), sol.get(), &gamma, &r1, &r2), "computing residuals");
      if (!solve_out.empty()) write_vector(solve_out, x);
      std::cout << nlohmann::json{{"x", x}, {"xi", xi}, {"gamma", gamma}, {"r1_norm", r1}, {"r2_norm", r2}}.dump(2)
                << '\n';
      return 0;
    }

    if (*be) {
      ProblemPtr prob = load(be_problem);
      const std::vector<double> y = read_vector(be_y);
      std::optional<std::vector<double>> xi0;
      if (!be_xi0.empty()) xi0 = read_vector(be_xi0);
      const ilse_weights w{be_t1, be_t2, be_t3};
      char* raw = nullptr;
      check(ilse_backward_error(prob.get(), y.data(), static_cast<int64_t>(y.size()), xi0 ? xi0->data() : nullptr,
                                xi0 ? static_cast<int64_t>(xi0->size()) : 0, &w, &raw),
            "backward error");
      StringPtr text(raw);
      std::cout << text.get();
      return 0;
    }

    if (*ex) {
      nlohmann::json cfg = nlohmann::json::object();
      if (!ex_config.empty()) {
        std::ifstream in(ex_config);
        if (!in) {
          std::cerr << "ilse: cannot read config '" << ex_config << "'\n";
          return kExitUsage;
        }
        try {
          in >> cfg;
        } catch (const nlohmann::json::exception& e) {
          std::cerr << "ilse: config '" << ex_config << "': " << e.what() << '\n';
          return kExitUsage;
        }
      }
      auto given = [&](const char* flag) { return ex->count(flag) > 0; };
      if (given("--m")) cfg["m"] = ex_dims.m;
      if (given("--n")) cfg["n"] = ex_dims.n;
      if (given("--s")) cfg["s"] = ex_dims.s;
      if (given("--p")) cfg["p"] = ex_dims.p;
      if (given("--q")) cfg["q"] = ex_dims.q;
      if (given("--kappa-a")) cfg["kappa_A"] = ex_kappa_a;
      if (given("--kappa-b")) cfg["kappa_B"] = ex_kappa_b;
      if (given("--eps")) cfg["eps"] = ex_eps;
      if (given("--trials")) cfg["trials"] = ex_trials;
      if (given("--seed")) cfg["seed"] = ex_seed;
      if (given("--theta1")) cfg["theta1"] = ex_t1;
      if (given("--theta2")) cfg["theta2"] = ex_t2;
      if (given("--theta3")) cfg["theta3"] = ex_t3;
      if (given("--format")) cfg["format"] = ex_format;
      if (given("--jobs")) cfg["jobs"] = ex_jobs;

      char* raw = nullptr;
      int failed = 0;
      const ilse_status st = ilse_experiment_run(cfg.dump().c_str(), &raw, &failed);
      StringPtr table(raw);
      if (table) emit(table.get(), ex_out);
      if (failed > 0) std::cerr << "ilse: " << failed << " trial(s) failed; see the table\n";
      check(st, "experiment");
      return 0;
    }

    if (*ver) {
      char* raw = nullptr;
      int ok = 0;
      const ilse_status st = ilse_verify(v_instances, v_seed, v_fault ? 1 : 0, v_format.c_str(), &raw, &ok);
      StringPtr report(raw);
      if (report) emit(report.get(), v_out);
      check(st, "verify");
      return 0;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return kExitUsage;
}
