#pragma once

#include <climits>

#include "crawlsched/params.hpp"

namespace crawl {

/// Crawl-value function variants.
enum class ValueVariant {
  Greedy,     ///< ignores CIS entirely
  GreedyCis,  ///< assumes signals are noiseless (no false positives)
  GreedyNcis  ///< exact noisy-CIS value function
};

/// Normalized residual of the order-th Taylor polynomial of exp:
/// exp(-x) * sum_{j > order} x^j / j!, equal to the regularized lower
/// incomplete gamma P(order + 1, x). Increasing in x, decreasing in order,
/// always in [0, 1].
double residual(int order, double x);

/// Expected length of one crawl interval under the threshold policy
/// pi(iota). max_terms truncates the series (used by the Approx variants).
double interval_length_psi(Threshold iota, const PageParams& p,
                           int max_terms = INT_MAX);

/// Expected cumulative freshness accrued over one crawl interval.
double cum_freshness_w(Threshold iota, const PageParams& p,
                       int max_terms = INT_MAX);

/// Crawl frequency 1 / psi(iota). iota == 0 is a domain error; iota == +inf
/// yields 0.
double frequency_f(Threshold iota, const PageParams& p,
                   int max_terms = INT_MAX);

/// Crawl value V(iota). approx_level > 0 truncates the GreedyNcis series to
/// that many terms; 0 means exact. Supremum over iota is mu_tilde / delta
/// for every variant.
double crawl_value(Threshold iota, const PageParams& p, ValueVariant variant,
                   int approx_level = 0);

/// Expected freshness contribution of crawling at a fixed rate xi with no
/// CIS: (mu_tilde / delta) * xi * (1 - exp(-delta / xi)). Continuous at
/// xi == 0 with value 0.
double objective_g(double xi, double mu_tilde, double delta);

/// Derivative of objective_g in xi; equals crawl_value(1/xi, Greedy).
double objective_g_prime(double xi, double mu_tilde, double delta);

/// Per-page expected freshness of the threshold policy:
/// mu_tilde * w(iota) * f(iota). Zero at iota == +inf.
double objective_o(Threshold iota, const PageParams& p);

/// Smallest iota with crawl_value(iota) >= target, +inf when the target
/// exceeds the attainable supremum or is not reached below max_iota. The
/// returned point errs low: the value there is <= target up to bisection
/// resolution.
Threshold invert_value(double target, const PageParams& p,
                       ValueVariant variant, int approx_level = 0,
                       double max_iota = 1e15);

/// Threshold whose crawl frequency equals the given rate.
Threshold invert_frequency(double rate, const PageParams& p);

}  // namespace crawl
