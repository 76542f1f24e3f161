#pragma once

#include <limits>
#include <span>

namespace crawl {

/// Crawl threshold on the effective elapsed time. +inf means "never crawl".
using Threshold = double;

inline constexpr double kNeverCrawl = std::numeric_limits<double>::infinity();

/// Per-page model parameters: raw Poisson rates plus the derived quantities
/// the value functions operate on.
///
///   alpha     rate of changes carrying no signal, (1 - lam) * delta
///   gamma     total CIS rate, lam * delta + nu
///   beta      time-equivalent of one CIS, -log(nu / gamma) / alpha
///   mu_tilde  importance normalized over the page set
struct PageParams {
  double delta = 0.0;  ///< content change rate, > 0
  double mu = 0.0;     ///< request rate, >= 0
  double lam = 0.0;    ///< CIS recall in [0, 1]
  double nu = 0.0;     ///< false-positive CIS rate, >= 0

  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double mu_tilde = 0.0;

  /// Builds a page from raw rates and fills in the derived fields.
  /// mu_tilde is left equal to mu until normalize_importance() runs.
  /// Throws std::domain_error on out-of-range inputs.
  static PageParams from_raw(double delta, double mu, double lam, double nu);
};

/// Rescales mu_tilde so it sums to one across the page set.
void normalize_importance(std::span<PageParams> pages);

}  // namespace crawl
