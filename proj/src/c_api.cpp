#include "ilse/ilse.h"

#include "ilse/backward_error.hpp"
#include "ilse/harness.hpp"
#include "ilse/matrix_io.hpp"
#include "ilse/solver.hpp"
#include "ilse/testgen.hpp"

#include "json.hpp"

#include <cmath>
#include <cstring>
#include <new>
#include <string>

struct ilse_problem {
  ilse::IlseProblem p;
};

struct ilse_solution {
  ilse::IlseSolution s;
};

namespace {

thread_local std::string g_last_error;

ilse_status map_code(ilse::ErrorCode code) {
  using ilse::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return ILSE_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return ILSE_ERR_DIMENSION_MISMATCH;
    case ErrorCode::InvalidWeight: return ILSE_ERR_INVALID_WEIGHT;
    case ErrorCode::NotWellPosed: return ILSE_ERR_NOT_WELL_POSED;
    case ErrorCode::Precondition: return ILSE_ERR_PRECONDITION;
    case ErrorCode::RankDeficient: return ILSE_ERR_RANK_DEFICIENT;
    case ErrorCode::InfiniteTau: return ILSE_ERR_INFINITE_TAU;
    case ErrorCode::Io: return ILSE_ERR_IO;
    case ErrorCode::PropertyFailure: return ILSE_ERR_PROPERTY_FAILURE;
  }
  return ILSE_ERR_INTERNAL;
}

ilse_status fail(ilse_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
ilse_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const ilse::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ILSE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ILSE_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json vec(const ilse::Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (ilse::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

#define ILSE_REQUIRE(cond, msg) \
  if (!(cond)) return fail(ILSE_ERR_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

const char* ilse_last_error(void) { return g_last_error.c_str(); }

const char* ilse_status_name(ilse_status status) {
  switch (status) {
    case ILSE_OK: return "ok";
    case ILSE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ILSE_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case ILSE_ERR_INVALID_WEIGHT: return "invalid weight";
    case ILSE_ERR_NOT_WELL_POSED: return "not well posed";
    case ILSE_ERR_PRECONDITION: return "precondition violated";
    case ILSE_ERR_RANK_DEFICIENT: return "rank deficient";
    case ILSE_ERR_INFINITE_TAU: return "infinite tau";
    case ILSE_ERR_IO: return "i/o error";
    case ILSE_ERR_PROPERTY_FAILURE: return "property failure";
    case ILSE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ilse_string_free(char* str) { std::free(str); }

ilse_status ilse_problem_create(const double* A, const double* b, const double* B, const double* d, int64_t m,
                                int64_t n, int64_t s, int64_t p, int64_t q, ilse_problem** out) {
  ILSE_REQUIRE(out, "out must not be NULL");
  ILSE_REQUIRE(m >= 0 && n >= 0 && s >= 0 && p >= 0 && q >= 0, "dimensions must be nonnegative");
  ILSE_REQUIRE((A || m * n == 0) && (b || m == 0) && (B || s * n == 0) && (d || s == 0),
               "data pointers must not be NULL");
  *out = nullptr;
  return guarded([&] {
    using ilse::Matrix;
    using ilse::Vector;
    ilse::IlseProblem prob = ilse::make_problem(
        m * n != 0 ? Matrix(Eigen::Map<const Matrix>(A, m, n)) : Matrix(m, n),
        m ? Vector(Eigen::Map<const Vector>(b, m)) : Vector(0),
        s * n != 0 ? Matrix(Eigen::Map<const Matrix>(B, s, n)) : Matrix(s, n),
        s ? Vector(Eigen::Map<const Vector>(d, s)) : Vector(0), ilse::SignatureMatrix(p, q));
    *out = new ilse_problem{std::move(prob)};
    return ILSE_OK;
  });
}

void ilse_problem_free(ilse_problem* problem) { delete problem; }

ilse_status ilse_problem_dims(const ilse_problem* problem, int64_t* m, int64_t* n, int64_t* s, int64_t* p,
                              int64_t* q) {
  ILSE_REQUIRE(problem, "problem must not be NULL");
  if (m) *m = problem->p.m();
  if (n) *n = problem->p.n();
  if (s) *s = problem->p.s();
  if (p) *p = problem->p.sig.p();
  if (q) *q = problem->p.sig.q();
  return ILSE_OK;
}

ilse_status ilse_problem_load(const char* dir, ilse_problem** out) {
  ILSE_REQUIRE(dir && out, "dir and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new ilse_problem{ilse::load_problem(dir)};
    return ILSE_OK;
  });
}

ilse_status ilse_problem_save(const ilse_problem* problem, const char* dir) {
  ILSE_REQUIRE(problem && dir, "problem and dir must not be NULL");
  return guarded([&] {
    ilse::save_problem(dir, problem->p);
    return ILSE_OK;
  });
}

void ilse_gen_params_default(ilse_gen_params* params) {
  if (!params) return;
  const ilse::GenParams g;
  *params = ilse_gen_params{g.m, g.n, g.s, g.p, g.q, g.kappa_A, g.kappa_B, g.seed, g.hyper_bound};
}

ilse_status ilse_generate(const ilse_gen_params* params, ilse_problem** out, double* achieved_kappa_A) {
  ILSE_REQUIRE(params && out, "params and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    ilse::GenParams g;
    g.m = params->m, g.n = params->n, g.s = params->s, g.p = params->p, g.q = params->q;
    g.kappa_A = params->kappa_A, g.kappa_B = params->kappa_B;
    g.seed = params->seed, g.hyper_bound = params->hyper_bound;
    ilse::GeneratedInstance inst = ilse::gen_ilse_instance(g);
    if (achieved_kappa_A) *achieved_kappa_A = inst.achieved_kappa_A;
    *out = new ilse_problem{std::move(inst.problem)};
    return ILSE_OK;
  });
}

ilse_status ilse_problem_perturb(const ilse_problem* problem, double eps, uint64_t seed, ilse_problem** out) {
  ILSE_REQUIRE(problem && out, "problem and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new ilse_problem{ilse::perturbed(problem->p, ilse::gen_perturbation(problem->p, eps, seed))};
    return ILSE_OK;
  });
}

ilse_status ilse_check_well_posedness(const ilse_problem* problem, char** json_out) {
  ILSE_REQUIRE(problem && json_out, "problem and json_out must not be NULL");
  *json_out = nullptr;
  return guarded([&] {
    const ilse::WellPosednessReport r = ilse::check_well_posedness(problem->p);
    const nlohmann::json j{{"well_posed", r.well_posed()},
                           {"rank_ok", r.rank_ok},
                           {"projected_pd_ok", r.projected_pd_ok},
                           {"min_projected_eig", num(r.min_projected_eig)},
                           {"pd_tolerance", r.pd_tolerance}};
    *json_out = dup_string(j.dump(2) + "\n");
    return ILSE_OK;
  });
}

ilse_status ilse_solve(const ilse_problem* problem, ilse_solution** out) {
  ILSE_REQUIRE(problem && out, "problem and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new ilse_solution{ilse::solve_ilse(problem->p)};
    return ILSE_OK;
  });
}

ilse_status ilse_solve_augmented(const ilse_problem* problem, ilse_solution** out) {
  ILSE_REQUIRE(problem && out, "problem and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new ilse_solution{ilse::solve_augmented(problem->p)};
    return ILSE_OK;
  });
}

void ilse_solution_free(ilse_solution* solution) { delete solution; }

ilse_status ilse_solution_x(const ilse_solution* solution, double* x, int64_t len) {
  ILSE_REQUIRE(solution && x, "solution and x must not be NULL");
  if (len != solution->s.x.size()) return fail(ILSE_ERR_DIMENSION_MISMATCH, "buffer length must equal n");
  Eigen::Map<ilse::Vector>(x, len) = solution->s.x;
  return ILSE_OK;
}

ilse_status ilse_solution_xi(const ilse_solution* solution, double* xi, int64_t len) {
  ILSE_REQUIRE(solution && (xi || len == 0), "solution and xi must not be NULL");
  if (len != solution->s.xi.size()) return fail(ILSE_ERR_DIMENSION_MISMATCH, "buffer length must equal s");
  if (len) Eigen::Map<ilse::Vector>(xi, len) = solution->s.xi;
  return ILSE_OK;
}

ilse_status ilse_solution_residuals(const ilse_problem* problem, const ilse_solution* solution, double* gamma,
                                    double* r1_norm, double* r2_norm) {
  ILSE_REQUIRE(problem && solution, "problem and solution must not be NULL");
  return guarded([&] {
    if (gamma) *gamma = ilse::augmented_residual(problem->p, solution->s);
    const auto [r1, r2] = ilse::normal_equation_residuals(problem->p, solution->s.x, solution->s.xi);
    if (r1_norm) *r1_norm = r1.norm();
    if (r2_norm) *r2_norm = r2.norm();
    return ILSE_OK;
  });
}

ilse_status ilse_backward_error(const ilse_problem* problem, const double* y, int64_t n, const double* xi0,
                                int64_t s, const ilse_weights* weights, char** json_out) {
  ILSE_REQUIRE(problem && y && json_out, "problem, y and json_out must not be NULL");
  *json_out = nullptr;
  return guarded([&] {
    if (n != problem->p.n()) return fail(ILSE_ERR_DIMENSION_MISMATCH, "y must have length n");
    std::optional<ilse::Vector> x0;
    if (xi0) {
      if (s != problem->p.s()) return fail(ILSE_ERR_DIMENSION_MISMATCH, "xi0 must have length s");
      x0 = Eigen::Map<const ilse::Vector>(xi0, s);
    }
    ilse::WeightScheme w;
    if (weights) w = {weights->theta1, weights->theta2, weights->theta3};
    const ilse::Vector yv = Eigen::Map<const ilse::Vector>(y, n);
    const ilse::BackwardErrorReport r = ilse::backward_error_bounds(problem->p, yv, x0, w);
    nlohmann::json j{{"rho_xi1", num(r.rho_xi1)},
                     {"rho_xi0", r.rho_xi0 ? num(*r.rho_xi0) : nlohmann::json(nullptr)},
                     {"tau0", num(r.tau0)},
                     {"alpha", num(r.alpha)},
                     {"alpha_lower", num(r.alpha_lower)},
                     {"small_rho_condition", r.small_rho_condition},
                     {"bounds_applicable", r.bounds_applicable},
                     {"mu_upper", r.mu_upper ? num(*r.mu_upper) : nlohmann::json(nullptr)},
                     {"mu_lower_indicative", num(r.mu_lower)},
                     {"distance_lower", num(r.distance_lower)},
                     {"xi1", vec(r.xi1)},
                     {"weights", {w.theta1, w.theta2, w.theta3}}};
    *json_out = dup_string(j.dump(2) + "\n");
    return ILSE_OK;
  });
}

ilse_status ilse_experiment_run(const char* config_json, char** table_out, int* failed_rows) {
  ILSE_REQUIRE(config_json && table_out, "config_json and table_out must not be NULL");
  *table_out = nullptr;
  return guarded([&] {
    const ilse::ExperimentConfig cfg = ilse::ExperimentConfig::from_json_text(config_json);
    const ilse::ExperimentResult res = ilse::run_experiment(cfg);
    *table_out = dup_string(ilse::format_result(res, cfg.format));
    if (failed_rows) *failed_rows = res.failed;
    if (!res.rows.empty() && res.failed == static_cast<int>(res.rows.size()))
      return fail(ILSE_ERR_NOT_WELL_POSED, "every trial failed: " + res.rows.front().failure);
    return ILSE_OK;
  });
}

ilse_status ilse_verify(int instances, uint64_t seed, int inject_fault, const char* format, char** report_out,
                        int* all_ok) {
  ILSE_REQUIRE(report_out, "report_out must not be NULL");
  *report_out = nullptr;
  const std::string fmt = format ? format : "text";
  ILSE_REQUIRE(fmt == "text" || fmt == "json", "format must be 'text' or 'json'");
  return guarded([&] {
    ilse::VerifyOptions opt;
    opt.instances = instances;
    opt.seed = seed;
    opt.inject_j_sign_fault = inject_fault != 0;
    const ilse::VerifyReport rep = ilse::verify_suite(opt);
    *report_out = dup_string(fmt == "json" ? rep.to_json_text() : rep.to_text());
    if (all_ok) *all_ok = rep.ok();
    if (!rep.ok()) return fail(ILSE_ERR_PROPERTY_FAILURE, "one or more properties failed");
    return ILSE_OK;
  });
}

}  // extern "C"
