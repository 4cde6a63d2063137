#include "ilse/harness.hpp"

#include "ilse/backward_error.hpp"
#include "ilse/solver.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace ilse {

namespace {

constexpr std::uint64_t kPerturbationStream = 0x7e57;

std::string sci(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<double> positive_list(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be an array");
  return j.get<std::vector<double>>();
}

}  // namespace

OutputFormat parse_output_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "markdown" || name == "md") return OutputFormat::Markdown;
  if (name == "json") return OutputFormat::Json;
  throw Error(ErrorCode::InvalidArgument, "unknown output format '" + name + "'");
}

const char* to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Markdown: return "markdown";
    case OutputFormat::Json: return "json";
  }
  return "csv";
}

void ExperimentConfig::validate() const {
  if (kappa_A_list.empty() || kappa_B_list.empty() || eps_list.empty())
    throw Error(ErrorCode::InvalidArgument, "kappa_A, kappa_B and eps lists must be nonempty");
  if (trials_per_cell < 1) throw Error(ErrorCode::InvalidArgument, "trials per cell must be >= 1");
  if (jobs < 1) throw Error(ErrorCode::InvalidArgument, "jobs must be >= 1");
  for (double e : eps_list)
    if (!(e >= 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "eps values must be >= 0");
  weights.validate();
  GenParams probe;
  probe.m = m, probe.n = n, probe.s = s, probe.p = p, probe.q = q;
  probe.hyper_bound = hyper_bound;
  for (double ka : kappa_A_list)
    for (double kb : kappa_B_list) {
      probe.kappa_A = ka;
      probe.kappa_B = kb;
      probe.validate();
    }
  if (s < 1) throw Error(ErrorCode::InvalidArgument, "experiments need at least one constraint (s >= 1)");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");

  ExperimentConfig c;
  try {
    c.m = j.value("m", c.m);
    c.n = j.value("n", c.n);
    c.s = j.value("s", c.s);
    c.p = j.value("p", c.p);
    c.q = j.value("q", c.q);
    if (j.contains("kappa_A")) c.kappa_A_list = positive_list(j["kappa_A"], "kappa_A");
    if (j.contains("kappa_B")) c.kappa_B_list = positive_list(j["kappa_B"], "kappa_B");
    if (j.contains("eps")) c.eps_list = positive_list(j["eps"], "eps");
    c.trials_per_cell = j.value("trials", c.trials_per_cell);
    c.base_seed = j.value("seed", c.base_seed);
    c.weights.theta1 = j.value("theta1", c.weights.theta1);
    c.weights.theta2 = j.value("theta2", c.weights.theta2);
    c.weights.theta3 = j.value("theta3", c.weights.theta3);
    if (j.contains("format")) c.format = parse_output_format(j["format"].get<std::string>());
    c.hyper_bound = j.value("hyper_bound", c.hyper_bound);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string ExperimentConfig::to_json_text() const {
  nlohmann::json j{{"m", m},
                   {"n", n},
                   {"s", s},
                   {"p", p},
                   {"q", q},
                   {"kappa_A", kappa_A_list},
                   {"kappa_B", kappa_B_list},
                   {"eps", eps_list},
                   {"trials", trials_per_cell},
                   {"seed", base_seed},
                   {"theta1", weights.theta1},
                   {"theta2", weights.theta2},
                   {"theta3", weights.theta3},
                   {"format", to_string(format)},
                   {"hyper_bound", hyper_bound},
                   {"jobs", jobs}};
  return j.dump(2);
}

double mu_one(const PerturbationQuadruple& pert) { return weighted_perturbation_norm(pert, WeightScheme{}); }

double residual_gamma(const IlseProblem& problem, const IlseSolution& sol) {
  return augmented_residual(problem, sol);
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t ia, std::size_t ib, int trial) {
  const std::uint64_t key = (static_cast<std::uint64_t>(ia) << 40) ^ (static_cast<std::uint64_t>(ib) << 20) ^
                            static_cast<std::uint64_t>(trial);
  return derive_seed(base_seed, key);
}

ExperimentRow run_trial(const GenParams& params, double eps, const WeightScheme& w, std::uint64_t seed) {
  ExperimentRow row;
  row.eps = eps;
  row.kappa_A_nominal = params.kappa_A;
  row.kappa_B = params.kappa_B;
  row.seed = seed;
  try {
    GenParams gp = params;
    gp.seed = seed;
    const GeneratedInstance inst = gen_ilse_instance(gp);
    const IlseProblem& original = inst.problem;
    row.kappa_A = inst.achieved_kappa_A;

    const IlseSolution x = solve_ilse(original);
    row.gamma = residual_gamma(original, x);

    const PerturbationQuadruple pert = gen_perturbation(original, eps, derive_seed(seed, kPerturbationStream));
    const IlseProblem shifted = perturbed(original, pert);
    // A perturbed problem that lost definiteness on N(B) still has a
    // stationary point; solve it anyway and flag it.
    row.perturbed_well_posed = check_well_posedness(shifted).well_posed();
    const IlseSolution y = solve_augmented(shifted);
    row.gamma_bar = residual_gamma(shifted, y);
    row.mu_1 = mu_one(pert);

    const BackwardErrorReport rep = backward_error_bounds(original, y.x, x.xi, w);
    row.rho_xi1 = rep.rho_xi1;
    row.rho_xi0 = rep.rho_xi0.value_or(std::numeric_limits<double>::quiet_NaN());
    row.tau0 = rep.tau0;
    row.condition_flag = rep.small_rho_condition;
    row.rho_xi_bar = rho_at(original, y.x, y.xi, w);
  } catch (const Error& e) {
    row.failed = true;
    row.failure = e.what();
  }
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();

  struct Task {
    double eps;
    std::size_t ia, ib;
    int trial;
  };
  std::vector<Task> tasks;
  for (double eps : config.eps_list)
    for (std::size_t ib = 0; ib < config.kappa_B_list.size(); ++ib)
      for (std::size_t ia = 0; ia < config.kappa_A_list.size(); ++ia)
        for (int t = 0; t < config.trials_per_cell; ++t) tasks.push_back({eps, ia, ib, t});

  ExperimentResult result;
  result.rows.resize(tasks.size());
  auto run_one = [&](std::size_t k) {
    const Task& task = tasks[k];
    GenParams params;
    params.m = config.m, params.n = config.n, params.s = config.s, params.p = config.p, params.q = config.q;
    params.kappa_A = config.kappa_A_list[task.ia];
    params.kappa_B = config.kappa_B_list[task.ib];
    params.hyper_bound = config.hyper_bound;
    result.rows[k] = run_trial(params, task.eps, config.weights,
                               trial_seed(config.base_seed, task.ia, task.ib, task.trial));
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), tasks.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < tasks.size(); ++k) run_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < tasks.size(); k = next++) run_one(k);
      });
    for (auto& th : pool) th.join();
  }

  const std::size_t per_cell = static_cast<std::size_t>(config.trials_per_cell);
  for (std::size_t start = 0; start < result.rows.size(); start += per_cell) {
    CellSummary cell;
    const ExperimentRow& first = result.rows[start];
    cell.eps = first.eps;
    cell.kappa_A_nominal = first.kappa_A_nominal;
    cell.kappa_B = first.kappa_B;
    std::vector<double> mus, ratios;
    for (std::size_t k = start; k < start + per_cell; ++k) {
      const ExperimentRow& row = result.rows[k];
      ++cell.rows;
      if (row.failed) {
        ++cell.failed;
        continue;
      }
      mus.push_back(row.mu_1);
      if (row.eps > 0.0) ratios.push_back(row.rho_xi1 / row.eps);
    }
    cell.median_mu_1 = median(mus);
    cell.median_rho_over_eps = median(ratios);
    result.failed += cell.failed;
    result.cells.push_back(cell);
  }
  return result;
}

PerturbationQuadruple construct_feasible_perturbation(const IlseProblem& problem,
                                                      const Eigen::Ref<const Vector>& y,
                                                      const Eigen::Ref<const Vector>& xi, double eps,
                                                      std::uint64_t seed) {
  problem.validate();
  if (y.size() != problem.n() || xi.size() != problem.s())
    throw Error(ErrorCode::DimensionMismatch, "y must have length n and xi length s");
  const double xi2 = xi.squaredNorm();
  if (!(xi2 > 0.0)) throw Error(ErrorCode::Precondition, "multiplier must be nonzero");

  PerturbationQuadruple pert = gen_perturbation(problem, eps, seed);
  const Matrix Ap = problem.A + pert.E;
  const Vector v = Ap.transpose() * problem.sig.apply(problem.b + pert.f - Ap * y) - problem.B.transpose() * xi;
  pert.F = xi * v.transpose() / xi2;
  pert.g = (problem.B + pert.F) * y - problem.d;
  return pert;
}

std::string format_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const ExperimentRow& r : result.rows) {
    os << sci(r.eps) << ',' << sci(r.failed ? NAN : r.kappa_A) << ',' << sci(r.kappa_B) << ',';
    if (r.failed) {
      os << "nan,nan,nan,nan,nan,nan,failed," << r.seed << '\n';
      continue;
    }
    os << sci(r.gamma) << ',' << sci(r.gamma_bar) << ',' << sci(r.mu_1) << ',' << sci(r.rho_xi1) << ','
       << sci(r.rho_xi0) << ',' << sci(r.tau0) << ',' << (r.condition_flag ? 1 : 0) << ',' << r.seed << '\n';
  }
  for (const CellSummary& c : result.cells) {
    os << "# summary eps=" << sci(c.eps) << " kappa_A=" << sci(c.kappa_A_nominal) << " kappa_B=" << sci(c.kappa_B)
       << " rows=" << c.rows << " failed=" << c.failed << " median_mu_1=" << sci(c.median_mu_1)
       << " median_rho_xi1_over_eps=" << sci(c.median_rho_over_eps) << '\n';
  }
  return os.str();
}

std::string format_markdown(const ExperimentResult& result) {
  std::ostringstream os;
  os << "| eps | kappa_A | kappa_B | gamma | gamma_bar | mu_1 | rho_xi1 |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const ExperimentRow& r : result.rows) {
    if (r.failed) {
      os << "| " << sci(r.eps) << " | failed | " << sci(r.kappa_B) << " | " << r.failure << " | | | |\n";
      continue;
    }
    os << "| " << sci(r.eps) << " | " << sci(r.kappa_A) << " | " << sci(r.kappa_B) << " | " << sci(r.gamma)
       << " | " << sci(r.gamma_bar) << " | " << sci(r.mu_1) << " | " << sci(r.rho_xi1) << " |\n";
  }
  os << "\n| eps | kappa_A (nominal) | kappa_B | rows | failed | median mu_1 | median rho_xi1/eps |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const CellSummary& c : result.cells) {
    os << "| " << sci(c.eps) << " | " << sci(c.kappa_A_nominal) << " | " << sci(c.kappa_B) << " | " << c.rows
       << " | " << c.failed << " | " << sci(c.median_mu_1) << " | " << sci(c.median_rho_over_eps) << " |\n";
  }
  return os.str();
}

std::string format_json(const ExperimentResult& result) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (const ExperimentRow& r : result.rows) {
    nlohmann::json j{{"eps", r.eps}, {"kappa_A_nominal", r.kappa_A_nominal}, {"kappa_B", r.kappa_B},
                     {"seed", r.seed}, {"failed", r.failed}};
    if (r.failed) {
      j["failure"] = r.failure;
    } else {
      j.update({{"kappa_A", num(r.kappa_A)},
                {"gamma", num(r.gamma)},
                {"gamma_bar", num(r.gamma_bar)},
                {"mu_1", num(r.mu_1)},
                {"rho_xi1", num(r.rho_xi1)},
                {"rho_xi0", num(r.rho_xi0)},
                {"rho_xi_bar", num(r.rho_xi_bar)},
                {"tau0", num(r.tau0)},
                {"condition_flag", r.condition_flag},
                {"perturbed_well_posed", r.perturbed_well_posed}});
    }
    rows.push_back(std::move(j));
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSummary& c : result.cells) {
    cells.push_back({{"eps", c.eps},
                     {"kappa_A_nominal", c.kappa_A_nominal},
                     {"kappa_B", c.kappa_B},
                     {"rows", c.rows},
                     {"failed", c.failed},
                     {"median_mu_1", num(c.median_mu_1)},
                     {"median_rho_xi1_over_eps", num(c.median_rho_over_eps)}});
  }
  return nlohmann::json{{"rows", rows}, {"summary", cells}, {"failed", result.failed}}.dump(2) + "\n";
}

std::string format_result(const ExperimentResult& result, OutputFormat format) {
  switch (format) {
    case OutputFormat::Csv: return format_csv(result);
    case OutputFormat::Markdown: return format_markdown(result);
    case OutputFormat::Json: return format_json(result);
  }
  return format_csv(result);
}

std::vector<ExperimentRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw Error(ErrorCode::InvalidArgument, "CSV header does not match");

  std::vector<ExperimentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 11) throw Error(ErrorCode::InvalidArgument, "CSV row must have 11 fields: " + line);

    auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
    ExperimentRow r;
    r.eps = num(f[0]);
    r.kappa_A = num(f[1]);
    r.kappa_B = num(f[2]);
    r.gamma = num(f[3]);
    r.gamma_bar = num(f[4]);
    r.mu_1 = num(f[5]);
    r.rho_xi1 = num(f[6]);
    r.rho_xi0 = num(f[7]);
    r.tau0 = num(f[8]);
    r.failed = f[9] == "failed";
    r.condition_flag = f[9] == "1";
    r.seed = std::strtoull(f[10].c_str(), nullptr, 10);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ilse
