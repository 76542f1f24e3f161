#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crawlsched/estimation_types.hpp"

namespace crawl {

/// CIS quality: precision = P(CIS corresponds to a real change) = λΔ/γ,
/// recall = P(change emits a CIS) = λ. NaN marks an undefined estimate.
struct CisQuality {
  double precision = 0.0;
  double recall = 0.0;
};

/// Empirical counting estimator. Biased: a change may go unsignalled within
/// an interval that still contains a false-positive CIS, and vice versa.
CisQuality estimate_naive(std::span<const IntervalObservation> obs);

struct MleResult {
  double alpha = 0.0;  ///< unsignalled change rate
  double ab = 0.0;     ///< product α·β
  double beta = 0.0;   ///< ab / alpha
  double loglik = 0.0;
  double grad_norm = 0.0;  ///< sup-norm of the (α, αβ) gradient at the optimum
  int iterations = 0;
  bool converged = false;
  bool boundary = false;
  std::string warning;
};

/// Maximum-likelihood fit of (α, αβ) from crawl-interval observations.
/// Model: P(z=1 | τ, n) = 1 − exp(−(α·τ + αβ·n)).
/// Throws std::invalid_argument on degenerate input, std::runtime_error on
/// non-convergence.
MleResult fit_mle(std::span<const IntervalObservation> obs);

/// Converts (α, β, γ) back to the generative parameters and CIS quality:
/// ν = γe^{−αβ}, Δ = α + γ − ν, λ = (γ−ν)/Δ, precision = (γ−ν)/γ.
struct QualityConversion {
  CisQuality quality;
  double delta = 0.0;
  double lam = 0.0;
  double nu = 0.0;
};
QualityConversion params_to_quality(double alpha, double beta, double gamma);

/// Full pipeline: MLE for (α, αβ), γ from the empirical CIS rate
/// (Σ n_cis / Σ τ_elap), then conversion to precision/recall.
CisQuality estimate_mle(std::span<const IntervalObservation> obs);

/// Reads "tau_elap n_cis z" per line; '#' starts a comment.
std::vector<IntervalObservation> read_observation_log(std::istream& in);

}  // namespace crawl
