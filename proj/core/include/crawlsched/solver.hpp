#pragma once

#include <span>
#include <vector>

#include "crawlsched/value.hpp"

namespace crawl {

/// Optimal continuous policy: per-page thresholds/rates together with the
/// Lagrange multiplier that equalizes the crawl values.
struct ContinuousSolution {
  double lambda_mult = 0.0;
  std::vector<Threshold> iotas;
  std::vector<double> rates;
  double achieved_bandwidth = 0.0;
  double objective = 0.0;
  bool saturated = false;  ///< R exceeded the bandwidth attainable at iota_min
};

struct SolverOptions {
  double tol = 1e-9;     ///< relative budget tolerance
  double min_rate = 0.0; ///< optional floor on per-page crawl rates (0 = off)
  int max_outer = 200;
};

/// Nested bisection from the KKT conditions: the inner loop matches each
/// page's crawl value to a trial multiplier, the outer loop drives the total
/// crawl rate to R. Pages whose value supremum falls below the multiplier
/// are excluded (iota = +inf, rate 0).
ContinuousSolution solve_kkt(std::span<const PageParams> pages, double R,
                             ValueVariant variant, int approx_level = 0,
                             const SolverOptions& opts = {});

/// No-CIS specialization working directly on rates via G'.
ContinuousSolution solve_no_cis(std::span<const PageParams> pages, double R,
                                const SolverOptions& opts = {});

/// Expected fraction of requests served fresh under the solution.
double continuous_accuracy(const ContinuousSolution& sol,
                           std::span<const PageParams> pages,
                           ValueVariant variant = ValueVariant::Greedy);

}  // namespace crawl
