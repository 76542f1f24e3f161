#include "crawlsched/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace crawl {

namespace {

constexpr double kIotaMin = 1e-9;

double rate_at_multiplier(double lambda, const PageParams& p,
                          ValueVariant variant, int approx_level) {
  Threshold iota = invert_value(lambda, p, variant, approx_level);
  if (std::isinf(iota)) return 0.0;
  iota = std::max(iota, kIotaMin);
  return frequency_f(iota, p,
                     approx_level > 0 ? approx_level : INT_MAX);
}

// Rate solving G'(xi) = lambda for the no-CIS objective; 0 when lambda is
// above the supremum G'(0+) = mu_tilde / delta.
double no_cis_rate(double lambda, const PageParams& p) {
  if (lambda >= p.mu_tilde / p.delta) return 0.0;
  double hi = 1.0;
  while (objective_g_prime(hi, p.mu_tilde, p.delta) > lambda) {
    hi *= 2.0;
    if (hi > 1e18) break;
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (objective_g_prime(mid, p.mu_tilde, p.delta) > lambda)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct RateFn {
  virtual ~RateFn() = default;
  virtual double rate(double lambda, const PageParams& p) const = 0;
  virtual Threshold threshold(double lambda, const PageParams& p) const = 0;
};

// Shared outer bisection over the Lagrange multiplier. `free` marks the
// pages still participating; `fixed_rate` holds clamped contributions.
ContinuousSolution outer_search(std::span<const PageParams> pages, double R,
                                const RateFn& fn, const SolverOptions& opts,
                                const std::vector<char>& free,
                                const std::vector<double>& fixed_rate) {
  const std::size_t m = pages.size();
  ContinuousSolution sol;
  sol.iotas.assign(m, kNeverCrawl);
  sol.rates.assign(m, 0.0);

  double lambda_hi = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (free[i]) lambda_hi = std::max(lambda_hi, pages[i].mu_tilde / pages[i].delta);

  auto total_rate = [&](double lambda) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (free[i]) sum += fn.rate(lambda, pages[i]);
    return sum;
  };

  double budget = R;
  for (std::size_t i = 0; i < m; ++i)
    if (!free[i]) budget -= fixed_rate[i];
  budget = std::max(budget, 0.0);

  // Saturation: even the near-zero-threshold rates cannot reach the budget.
  if (total_rate(0.0) < budget * (1.0 - 1e-12)) sol.saturated = true;

  double lo = 0.0, hi = lambda_hi, lambda = lambda_hi;
  for (int it = 0; it < opts.max_outer && hi - lo > 1e-18 * lambda_hi; ++it) {
    lambda = 0.5 * (lo + hi);
    const double g = total_rate(lambda);
    if (budget > 0.0 && std::abs(g - budget) <= 0.1 * opts.tol * budget) break;
    if (g > budget)
      lo = lambda;
    else
      hi = lambda;
  }

  sol.lambda_mult = lambda;
  for (std::size_t i = 0; i < m; ++i) {
    if (!free[i]) continue;
    sol.iotas[i] = fn.threshold(lambda, pages[i]);
    sol.rates[i] = fn.rate(lambda, pages[i]);
  }
  return sol;
}

ContinuousSolution solve_with(std::span<const PageParams> pages, double R,
                              const RateFn& fn, const SolverOptions& opts) {
  if (pages.empty()) throw std::invalid_argument("solver: empty page set");
  if (!(R > 0.0)) throw std::invalid_argument("solver: R must be positive");

  const std::size_t m = pages.size();
  std::vector<char> free(m, 1);
  std::vector<double> fixed_rate(m, 0.0);
  std::vector<Threshold> fixed_iota(m, kNeverCrawl);

  ContinuousSolution sol = outer_search(pages, R, fn, opts, free, fixed_rate);

  if (opts.min_rate > 0.0) {
    // Water-filling with clamps: pin every below-floor page to the floor
    // rate and redistribute the remaining budget.
    for (;;) {
      bool changed = false;
      for (std::size_t i = 0; i < m; ++i) {
        if (free[i] && sol.rates[i] < opts.min_rate) {
          free[i] = 0;
          fixed_rate[i] = opts.min_rate;
          fixed_iota[i] = invert_frequency(opts.min_rate, pages[i]);
          changed = true;
        }
      }
      if (!changed) break;
      sol = outer_search(pages, R, fn, opts, free, fixed_rate);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!free[i]) {
        sol.rates[i] = fixed_rate[i];
        sol.iotas[i] = fixed_iota[i];
      }
    }
  }

  sol.achieved_bandwidth =
      std::accumulate(sol.rates.begin(), sol.rates.end(), 0.0);
  return sol;
}

}  // namespace

ContinuousSolution solve_kkt(std::span<const PageParams> pages, double R,
                             ValueVariant variant, int approx_level,
                             const SolverOptions& opts) {
  struct Kkt : RateFn {
    ValueVariant variant;
    int level;
    double rate(double lambda, const PageParams& p) const override {
      return rate_at_multiplier(lambda, p, variant, level);
    }
    Threshold threshold(double lambda, const PageParams& p) const override {
      Threshold iota = invert_value(lambda, p, variant, level);
      return std::isinf(iota) ? iota : std::max(iota, kIotaMin);
    }
  } fn;
  fn.variant = variant;
  fn.level = approx_level;
  ContinuousSolution sol = solve_with(pages, R, fn, opts);
  sol.objective = 0.0;
  for (std::size_t i = 0; i < pages.size(); ++i)
    if (!std::isinf(sol.iotas[i]))
      sol.objective += objective_o(sol.iotas[i], pages[i]);
  return sol;
}

ContinuousSolution solve_no_cis(std::span<const PageParams> pages, double R,
                                const SolverOptions& opts) {
  struct NoCis : RateFn {
    double rate(double lambda, const PageParams& p) const override {
      return no_cis_rate(lambda, p);
    }
    Threshold threshold(double lambda, const PageParams& p) const override {
      const double xi = no_cis_rate(lambda, p);
      return xi > 0.0 ? 1.0 / xi : kNeverCrawl;
    }
  } fn;
  ContinuousSolution sol = solve_with(pages, R, fn, opts);
  sol.objective = 0.0;
  for (std::size_t i = 0; i < pages.size(); ++i)
    sol.objective +=
        objective_g(sol.rates[i], pages[i].mu_tilde, pages[i].delta);
  return sol;
}

double continuous_accuracy(const ContinuousSolution& sol,
                           std::span<const PageParams> pages,
                           ValueVariant variant) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    if (variant == ValueVariant::Greedy) {
      acc += objective_g(sol.rates[i], pages[i].mu_tilde, pages[i].delta);
    } else if (!std::isinf(sol.iotas[i])) {
      acc += objective_o(sol.iotas[i], pages[i]);
    }
  }
  return acc;
}

}  // namespace crawl
