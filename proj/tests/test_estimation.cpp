#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "crawlsched/estimation.hpp"
#include "crawlsched/rng.hpp"
#include "doctest.h"

using namespace crawl;

namespace {

/// Draws crawl-interval observations from the generative model with raw
/// rates (delta, lam, nu) and exponential crawl gaps at the given rate.
std::vector<IntervalObservation> synth_obs(double delta, double lam, double nu,
                                           double crawl_rate, long n,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<IntervalObservation> obs;
  obs.reserve(n);
  for (long i = 0; i < n; ++i) {
    const double tau = rng.exponential(crawl_rate);
    const long changes = rng.poisson(delta * tau);
    long cis = rng.poisson(nu * tau);
    for (long c = 0; c < changes; ++c)
      if (rng.uniform() < lam) ++cis;
    obs.push_back({tau, static_cast<int>(cis), changes > 0 ? 1 : 0});
  }
  return obs;
}

double quality_error(const CisQuality& got, const CisQuality& want) {
  return std::max(std::abs(got.precision - want.precision),
                  std::abs(got.recall - want.recall));
}

}  // namespace

TEST_CASE("naive estimator: counting identities") {
  // precision = intervals with both / intervals with CIS,
  // recall = intervals with both / intervals with a change.
  std::vector<IntervalObservation> obs{
      {1.0, 1, 1}, {1.0, 1, 0}, {1.0, 0, 1}, {1.0, 0, 0}};
  const auto q = estimate_naive(obs);
  CHECK(q.precision == doctest::Approx(0.5));
  CHECK(q.recall == doctest::Approx(0.5));

  // No CIS at all: precision undefined, recall zero.
  std::vector<IntervalObservation> none{{1.0, 0, 1}, {1.0, 0, 0}};
  const auto qn = estimate_naive(none);
  CHECK(std::isnan(qn.precision));
  CHECK(qn.recall == 0.0);
}

TEST_CASE("params_to_quality: closed-form round trip") {
  // delta=1, lam=0.5, nu=0.5: alpha=0.5, gamma=1, beta=2 ln 2.
  const auto c = params_to_quality(0.5, 2.0 * std::log(2.0), 1.0);
  CHECK(c.delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.lam == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.nu == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.quality.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.quality.precision == doctest::Approx(0.5).epsilon(1e-12));

  // beta = 0: signals carry no information (lam = 0, nu = gamma).
  const auto z = params_to_quality(1.0, 0.0, 0.7);
  CHECK(z.lam == doctest::Approx(0.0).scale(1.0));
  CHECK(z.nu == doctest::Approx(0.7));
  CHECK(z.quality.precision == doctest::Approx(0.0).scale(1.0));

  // beta -> inf: no false positives, nu = 0, delta = alpha + gamma.
  const auto inf = params_to_quality(0.5, 1e6, 0.5);
  CHECK(inf.nu == doctest::Approx(0.0).scale(1e-9));
  CHECK(inf.delta == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(inf.quality.precision == doctest::Approx(1.0).epsilon(1e-9));

  // Inconsistent combination: implied delta would be nonpositive.
  CHECK_THROWS_AS(params_to_quality(-1.0, 1.0, 0.5), std::domain_error);
}

TEST_CASE("mle: recovers alpha and beta from synthetic data") {
  // delta=0.4, lam=0.5, nu=0.1: alpha=0.2, gamma=0.3, beta=ln(3)/0.2.
  const auto obs = synth_obs(0.4, 0.5, 0.1, 0.5, 200000, 915);
  const auto fit = fit_mle(obs);
  REQUIRE(fit.converged);
  CHECK(fit.grad_norm <= 1e-8);
  CHECK(fit.alpha == doctest::Approx(0.2).epsilon(0.05));
  CHECK(fit.beta == doctest::Approx(std::log(3.0) / 0.2).epsilon(0.05));

  const auto q = estimate_mle(obs);
  const CisQuality truth{0.5 * 0.4 / 0.3, 0.5};
  CHECK(quality_error(q, truth) < 0.02);
}

TEST_CASE("mle: no-CIS data degenerates to the 1-D fit") {
  // n = 0 everywhere with constant tau: closed form alpha = -log(1-zbar)/tau.
  Rng rng(17);
  std::vector<IntervalObservation> obs;
  const double tau = 2.0, alpha = 0.3;
  long zsum = 0;
  for (int i = 0; i < 50000; ++i) {
    const int z = rng.uniform() < -std::expm1(-alpha * tau) ? 1 : 0;
    zsum += z;
    obs.push_back({tau, 0, z});
  }
  const auto fit = fit_mle(obs);
  REQUIRE(fit.converged);
  CHECK(fit.ab == 0.0);
  const double closed = -std::log1p(-static_cast<double>(zsum) / 50000.0) / tau;
  CHECK(fit.alpha == doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("mle: complete separation hits the boundary") {
  std::vector<IntervalObservation> all_one(200, {1.0, 1, 1});
  const auto fit = fit_mle(all_one);
  CHECK(fit.boundary);
  CHECK(!fit.warning.empty());

  std::vector<IntervalObservation> all_zero(200, {1.0, 1, 0});
  const auto fz = fit_mle(all_zero);
  CHECK(fz.boundary);
}

TEST_CASE("mle: degenerate inputs are rejected") {
  CHECK_THROWS_AS(fit_mle({}), std::invalid_argument);
  std::vector<IntervalObservation> bad{{-1.0, 0, 1}};
  CHECK_THROWS_AS(fit_mle(bad), std::invalid_argument);
}

TEST_CASE("mle: error shrinks with more data") {
  const CisQuality truth{0.5 * 0.4 / 0.3, 0.5};
  std::vector<double> err_small, err_big;
  for (int s = 0; s < 7; ++s) {
    err_small.push_back(
        quality_error(estimate_mle(synth_obs(0.4, 0.5, 0.1, 0.5, 10000, 100 + s)),
                      truth));
    err_big.push_back(
        quality_error(estimate_mle(synth_obs(0.4, 0.5, 0.1, 0.5, 100000, 200 + s)),
                      truth));
  }
  std::sort(err_small.begin(), err_small.end());
  std::sort(err_big.begin(), err_big.end());
  CHECK(err_big[3] < err_small[3]);  // median comparison
}

TEST_CASE("mle: beats the naive estimator on biased data") {
  // Long intervals make the counting estimator's bias visible.
  const CisQuality truth{0.5 * 0.8 / 0.5, 0.5};
  std::vector<double> naive_err, mle_err;
  for (int s = 0; s < 9; ++s) {
    const auto obs = synth_obs(0.8, 0.5, 0.1, 0.4, 50000, 300 + s);
    naive_err.push_back(quality_error(estimate_naive(obs), truth));
    mle_err.push_back(quality_error(estimate_mle(obs), truth));
  }
  std::sort(naive_err.begin(), naive_err.end());
  std::sort(mle_err.begin(), mle_err.end());
  CHECK(mle_err[4] < naive_err[4]);
}

TEST_CASE("observation log parsing") {
  std::stringstream ss("# comment\n1.5 2 1\n0.5 0 0\n");
  const auto obs = read_observation_log(ss);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].tau_elap == 1.5);
  CHECK(obs[0].n_cis == 2);
  CHECK(obs[0].z == 1);
  CHECK(obs[1].z == 0);
}
