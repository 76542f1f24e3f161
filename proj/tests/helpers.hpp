#pragma once

// Shared utilities for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <vector>

#include "crawlsched/params.hpp"
#include "crawlsched/rng.hpp"
#include "crawlsched/simulator.hpp"

namespace testing_support {

/// PageParams from raw rates with mu_tilde set to mu (single-page use).
inline crawl::PageParams make_params(double delta, double mu, double lam,
                                     double nu) {
  auto p = crawl::PageParams::from_raw(delta, mu, lam, nu);
  p.mu_tilde = mu;
  return p;
}

/// PageParams with the derived fields pinned directly, bypassing from_raw.
/// Lets tests exercise limits such as gamma = 0 or an arbitrary beta.
inline crawl::PageParams direct_params(double alpha, double beta, double gamma,
                                       double delta, double mu_tilde) {
  crawl::PageParams p;
  p.delta = delta;
  p.mu = mu_tilde;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.mu_tilde = mu_tilde;
  return p;
}

struct FreshnessCell {
  double expected = 0.0;
  double variance = 0.0;
  long fresh = 0;
  long count = 0;
};

struct Chi2Result {
  double chi2 = 0.0;
  int dof = 0;
};

/// Validates the freshness law P(fresh | tau, n) = exp(-alpha tau) (nu/g)^n
/// on a single-page trace crawled at a fixed period. Each request is
/// assigned to a (tau-quartile, n) cell; the statistic compares observed
/// fresh counts against the per-request predicted probabilities.
inline Chi2Result freshness_chi2(const crawl::PageParams& p, double horizon,
                                 double crawl_period, std::uint64_t seed,
                                 int max_n = 2) {
  crawl::InstanceSpec spec;
  spec.m = 1;
  spec.horizon = horizon;
  spec.bandwidth = {{0.0, 1.0 / crawl_period}};
  std::vector<crawl::PageParams> pages{p};
  const auto trace = crawl::generate_trace(spec, pages, seed);

  struct Obs {
    double tau;
    int n;
    double prob;
    bool fresh;
  };
  std::vector<Obs> obs;
  double last_crawl = 0.0;
  double last_change = -1.0;
  int cis = 0;
  bool sampled = false;  // at most one request per interval: requests within
                         // an interval share state and are not independent
  std::size_t ev = 0;
  const double ratio = p.gamma > 0.0 ? p.nu / p.gamma : 0.0;
  for (long k = 1;; ++k) {
    const double crawl_t = k * crawl_period;
    if (crawl_t > horizon) break;
    while (ev < trace.events.size() && trace.events[ev].t <= crawl_t) {
      const auto& e = trace.events[ev++];
      const double tau = e.t - last_crawl;
      switch (e.kind) {
        case crawl::EventTrace::Change:
          last_change = e.t;
          break;
        case crawl::EventTrace::Cis:
          ++cis;
          break;
        case crawl::EventTrace::Request:
          if (!sampled) {
            obs.push_back({tau, cis,
                           std::exp(-p.alpha * tau) * std::pow(ratio, cis),
                           last_change <= last_crawl});
            sampled = true;
          }
          break;
      }
    }
    last_crawl = crawl_t;
    cis = 0;
    sampled = false;
  }

  // Quartile edges of tau pooled over all requests.
  std::vector<double> taus;
  taus.reserve(obs.size());
  for (const auto& o : obs) taus.push_back(o.tau);
  std::sort(taus.begin(), taus.end());
  auto quart = [&](const Obs& o) {
    int q = 0;
    for (int j = 1; j < 4; ++j)
      if (o.tau > taus[taus.size() * j / 4]) q = j;
    return q;
  };

  std::vector<FreshnessCell> cells(4 * (max_n + 1));
  for (const auto& o : obs) {
    if (o.n > max_n) continue;
    auto& c = cells[quart(o) * (max_n + 1) + o.n];
    c.expected += o.prob;
    c.variance += o.prob * (1.0 - o.prob);
    c.fresh += o.fresh ? 1 : 0;
    ++c.count;
  }

  Chi2Result r;
  for (const auto& c : cells) {
    if (c.count < 50 || c.variance < 10.0) continue;  // skip sparse cells
    const double z = (c.fresh - c.expected) / std::sqrt(c.variance);
    r.chi2 += z * z;
    ++r.dof;
  }
  return r;
}

/// Pooled standard error of a difference of replication means.
inline double pooled_se(const crawl::ReplicationStats& a,
                        const crawl::ReplicationStats& b) {
  const double sa = a.stderr_mean();
  const double sb = b.stderr_mean();
  return std::sqrt(sa * sa + sb * sb);
}

}  // namespace testing_support
