#include "ilse/oracle.hpp"

#include "ilse/backward_error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace ilse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class RhoObjective {
 public:
  RhoObjective(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const WeightScheme& w)
      : problem_(problem), y_(y), w_(w) {}

  double operator()(const Vector& xi) {
    ++evals_;
    try {
      return rho_at(problem_, y_, xi, w_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient) throw;
      return kInf;
    }
  }

  int evals() const { return evals_; }

 private:
  const IlseProblem& problem_;
  Vector y_;
  WeightScheme w_;
  int evals_ = 0;
};

struct RunResult {
  Vector xi;
  double f = kInf;
  int iterations = 0;
  bool converged = false;
};

// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2). After a
// converged run the simplex is rebuilt around the best vertex; a rebuild that
// gains nothing confirms convergence.
RunResult nelder_mead(RhoObjective& f, const Vector& start, double step, int budget, double tol) {
  const Index dim = start.size();
  RunResult out;
  out.xi = start;
  out.f = f(start);
  if (dim == 0 || out.f == 0.0) {
    out.converged = true;
    return out;
  }
  // A start where J is rank deficient is skipped.
  if (!std::isfinite(out.f)) return out;
  const int stop_at = f.evals() + budget - 1;

  for (int restart = 0; restart < 3 && f.evals() < stop_at; ++restart) {
    std::vector<Vector> pts(dim + 1, out.xi);
    std::vector<double> val(dim + 1, out.f);
    for (Index i = 0; i < dim; ++i) {
      pts[i + 1](i) += step;
      val[i + 1] = f(pts[i + 1]);
    }
    std::vector<int> order(dim + 1);
    bool converged = false;

    while (f.evals() < stop_at) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b]; });
      const int best = order.front(), worst = order.back(), second = order[dim - 1];

      const double spread = val[worst] - val[best];
      double diameter = 0.0;
      for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).lpNorm<Eigen::Infinity>());
      if ((std::isfinite(spread) && spread <= tol * val[best]) ||
          diameter <= tol * (1.0 + pts[best].lpNorm<Eigen::Infinity>())) {
        converged = true;
        break;
      }
      ++out.iterations;

      Vector centroid = Vector::Zero(dim);
      for (Index k = 0; k <= dim; ++k)
        if (k != worst) centroid += pts[k];
      centroid /= static_cast<double>(dim);

      const Vector reflected = centroid + (centroid - pts[worst]);
      const double fr = f(reflected);
      if (fr < val[best]) {
        const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
        const double fe = f(expanded);
        if (fe < fr) {
          pts[worst] = expanded;
          val[worst] = fe;
        } else {
          pts[worst] = reflected;
          val[worst] = fr;
        }
        continue;
      }
      if (fr < val[second]) {
        pts[worst] = reflected;
        val[worst] = fr;
        continue;
      }
      const bool outside = fr < val[worst];
      const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                        : Vector(centroid + 0.5 * (pts[worst] - centroid));
      const double fc = f(contracted);
      if (fc < std::min(fr, val[worst])) {
        pts[worst] = contracted;
        val[worst] = fc;
        continue;
      }
      for (Index k = 0; k <= dim; ++k) {
        if (k == best) continue;
        pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
        val[k] = f(pts[k]);
      }
    }

    const auto it = std::min_element(val.begin(), val.end());
    const bool improved = *it < out.f;
    const double gain = improved ? out.f - *it : 0.0;
    if (improved) {
      out.f = *it;
      out.xi = pts[static_cast<std::size_t>(it - val.begin())];
    }
    out.converged = converged;
    if (!converged) break;
    if (gain <= tol * out.f) break;
  }
  return out;
}

double default_step(const IlseProblem& problem, const Eigen::Ref<const Vector>& y, const Vector& xi1) {
  const double c = rhs_vector(problem, y, xi1).norm();
  return std::max(c, 1e-8 * (1.0 + xi1.norm()));
}

}  // namespace

MinimizeResult minimize_rho(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                            const WeightScheme& w, const MinimizeOptions& options) {
  w.validate();
  const Vector xi1 = xi_one(problem, y);
  const Index s = problem.s();
  const int budget = options.max_evals > 0 ? options.max_evals : static_cast<int>(200 * std::max<Index>(s, 1));
  const double step = options.initial_step > 0.0 ? options.initial_step : default_step(problem, y, xi1);

  std::vector<Vector> starts{xi1};
  if (options.xi0) {
    if (options.xi0->size() != s) throw Error(ErrorCode::DimensionMismatch, "xi0 must have length s");
    starts.push_back(*options.xi0);
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < options.random_starts; ++k) {
    Vector xi = xi1;
    for (Index i = 0; i < s; ++i) xi(i) += 10.0 * step * normal(rng);
    starts.push_back(std::move(xi));
  }

  RhoObjective objective(problem, y, w);
  MinimizeResult best;
  best.rho_star = kInf;
  int total_iterations = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const RunResult run = nelder_mead(objective, starts[k], step, budget, options.tol);
    total_iterations += run.iterations;
    // Strict improvement only: ties keep the lower start index.
    if (run.f < best.rho_star) {
      best.rho_star = run.f;
      best.xi_star = run.xi;
      best.converged = run.converged;
      best.best_start = static_cast<int>(k);
    }
  }
  if (!std::isfinite(best.rho_star))
    throw Error(ErrorCode::RankDeficient, "rho could not be evaluated at any start point");
  best.iterations = total_iterations;
  return best;
}

Vector rho_gradient_fd(const IlseProblem& problem, const Eigen::Ref<const Vector>& y,
                       const Eigen::Ref<const Vector>& xi, const WeightScheme& w, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  Vector grad(xi.size());
  Vector probe = xi;
  for (Index i = 0; i < xi.size(); ++i) {
    probe(i) = xi(i) + h;
    const double up = rho_at(problem, y, probe, w);
    probe(i) = xi(i) - h;
    const double down = rho_at(problem, y, probe, w);
    probe(i) = xi(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace ilse
