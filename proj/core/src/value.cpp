#include "crawlsched/value.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace crawl {

namespace {

constexpr double kSeriesEps = 1e-15;    // relative cutoff for psi/w terms
constexpr double kExpArgLimit = 700.0;  // above this exp(x) overflows

// Tail series: exp(-x) * sum_{j > order} x^j / j!. Accurate for small x
// where the partial-sum form cancels catastrophically.
double residual_tail_series(int order, double x) {
  double term =
      std::exp((order + 1) * std::log(x) - x - std::lgamma(order + 2.0));
  double sum = term;
  for (int j = order + 2; term > 0.0; ++j) {
    term *= x / j;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return std::min(sum, 1.0);
}

// 1 - exp(-x) * sum_{j <= order} x^j / j! with compensated summation.
double residual_partial_sum(int order, double x) {
  double sum = 1.0, term = 1.0, comp = 0.0;
  for (int j = 1; j <= order; ++j) {
    term *= x / j;
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double r = 1.0 - std::exp(-x) * sum;
  return std::clamp(r, 0.0, 1.0);
}

// Upper-tail route via the Lentz continued fraction for Q(a, x) with
// a = order + 1. Valid for x > a; converges in O(sqrt(x)) steps even near
// the transition region, where the partial sum would need O(order) terms.
double residual_upper_cf(int order, double x) {
  const double a = order + 1.0;
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  const double log_q = a * std::log(x) - x - std::lgamma(a) + std::log(h);
  return std::clamp(-std::expm1(log_q), 0.0, 1.0);
}

}  // namespace

double residual(int order, double x) {
  if (order < 0) throw std::domain_error("residual: order must be >= 0");
  if (std::isnan(x) || x < 0.0)
    throw std::domain_error("residual: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  // Chernoff-range shortcut: P(Poisson(x) <= order) < 1e-31 this far below
  // the mean, so the residual is 1 to machine precision.
  if (order + 1.0 < x - 12.0 * std::sqrt(x) - 30.0) return 1.0;
  if (x <= order + 1.0) return residual_tail_series(order, x);
  if (x > kExpArgLimit) return residual_upper_cf(order, x);
  return residual_partial_sum(order, x);
}

double interval_length_psi(Threshold iota, const PageParams& p,
                           int max_terms) {
  if (std::isnan(iota) || iota < 0.0)
    throw std::domain_error("psi: iota must be nonnegative");
  if (iota == 0.0) return 0.0;
  if (std::isinf(iota)) return std::numeric_limits<double>::infinity();
  if (p.gamma <= 0.0 || p.beta == 0.0) return iota;
  if (std::isinf(p.beta)) return residual(0, p.gamma * iota) / p.gamma;

  const long long kmax =
      std::min<long long>(max_terms - 1,
                          static_cast<long long>(std::floor(iota / p.beta)));
  double sum = 0.0;
  for (long long i = 0; i <= kmax; ++i) {
    const double arg = std::max(0.0, p.gamma * (iota - i * p.beta));
    const double term = residual(static_cast<int>(i), arg) / p.gamma;
    sum += term;
    if (term < kSeriesEps * sum || term == 0.0) break;
  }
  return sum;
}

double cum_freshness_w(Threshold iota, const PageParams& p, int max_terms) {
  if (std::isnan(iota) || iota < 0.0)
    throw std::domain_error("w: iota must be nonnegative");
  if (iota == 0.0) return 0.0;
  if (std::isinf(iota)) return 1.0 / p.delta;
  if (p.gamma <= 0.0 || p.beta == 0.0)
    return -std::expm1(-p.delta * iota) / p.delta;
  const double dn = p.delta + p.nu;  // equals alpha + gamma
  if (std::isinf(p.beta)) return residual(0, dn * iota) / dn;

  const long long kmax =
      std::min<long long>(max_terms - 1,
                          static_cast<long long>(std::floor(iota / p.beta)));
  const double ratio = p.nu / dn;
  double coef = 1.0 / dn;
  double sum = 0.0;
  for (long long i = 0; i <= kmax; ++i) {
    const double arg = std::max(0.0, dn * (iota - i * p.beta));
    const double term = coef * residual(static_cast<int>(i), arg);
    sum += term;
    if (term < kSeriesEps * sum || term == 0.0) break;
    coef *= ratio;
  }
  return sum;
}

double frequency_f(Threshold iota, const PageParams& p, int max_terms) {
  if (std::isnan(iota) || iota <= 0.0)
    throw std::domain_error("f: iota must be positive");
  if (std::isinf(iota)) return 0.0;
  return 1.0 / interval_length_psi(iota, p, max_terms);
}

double crawl_value(Threshold iota, const PageParams& p, ValueVariant variant,
                   int approx_level) {
  if (std::isnan(iota) || iota < 0.0)
    throw std::domain_error("crawl_value: iota must be nonnegative");
  const double sup = p.mu_tilde / p.delta;
  if (std::isinf(iota)) return sup;

  switch (variant) {
    case ValueVariant::Greedy:
      return sup * residual(1, p.delta * iota);
    case ValueVariant::GreedyCis: {
      if (p.gamma == 0.0) return sup * residual(1, p.delta * iota);
      const double ag = p.alpha + p.gamma;
      const double v = p.mu_tilde * (residual(0, ag * iota) / ag -
                                     residual(0, p.gamma * iota) *
                                         std::exp(-p.alpha * iota) / p.gamma);
      return std::clamp(v, 0.0, sup);
    }
    case ValueVariant::GreedyNcis: {
      const int terms = approx_level > 0 ? approx_level : INT_MAX;
      const double w = cum_freshness_w(iota, p, terms);
      // psi <= iota, so the correction vanishes once exp(-alpha iota)
      // underflows relative to w; skipping it avoids the long psi series.
      const double damp = std::exp(-p.alpha * iota);
      double v = p.mu_tilde * w;
      if (damp * iota > 1e-18 * w)
        v -= p.mu_tilde * damp * interval_length_psi(iota, p, terms);
      return std::clamp(v, 0.0, sup);
    }
  }
  throw std::logic_error("crawl_value: unknown variant");
}

double objective_g(double xi, double mu_tilde, double delta) {
  if (std::isnan(xi) || xi < 0.0)
    throw std::domain_error("objective_g: xi must be nonnegative");
  if (xi == 0.0) return 0.0;
  if (std::isinf(xi)) return mu_tilde;
  return mu_tilde / delta * xi * -std::expm1(-delta / xi);
}

double objective_g_prime(double xi, double mu_tilde, double delta) {
  if (std::isnan(xi) || xi < 0.0)
    throw std::domain_error("objective_g_prime: xi must be nonnegative");
  if (xi == 0.0) return mu_tilde / delta;
  if (std::isinf(xi)) return 0.0;
  return mu_tilde / delta * residual(1, delta / xi);
}

double objective_o(Threshold iota, const PageParams& p) {
  if (std::isnan(iota) || iota <= 0.0)
    throw std::domain_error("objective_o: iota must be positive");
  if (std::isinf(iota)) return 0.0;
  return p.mu_tilde * cum_freshness_w(iota, p) / interval_length_psi(iota, p);
}

Threshold invert_value(double target, const PageParams& p,
                       ValueVariant variant, int approx_level,
                       double max_iota) {
  const double sup = p.mu_tilde / p.delta;
  if (target <= 0.0) return 0.0;
  if (target >= sup) return kNeverCrawl;

  // The psi series is O(gamma * iota) terms; for most probe points the
  // bounds mu_tilde*(w - e^{-alpha x} x) <= V <= mu_tilde*w (psi <= x)
  // decide the comparison without it.
  const auto below = [&](double x) {
    if (variant == ValueVariant::GreedyNcis) {
      const int terms = approx_level > 0 ? approx_level : INT_MAX;
      const double w = cum_freshness_w(x, p, terms);
      if (p.mu_tilde * w < target) return true;
      const double damp = std::exp(-p.alpha * x);
      if (p.mu_tilde * (w - damp * x) >= target) return false;
    }
    return crawl_value(x, p, variant, approx_level) < target;
  };

  double hi = 1.0;
  while (below(hi)) {
    hi *= 2.0;
    if (hi > max_iota) return kNeverCrawl;
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (below(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

Threshold invert_frequency(double rate, const PageParams& p) {
  if (rate <= 0.0) return kNeverCrawl;
  const double target = 1.0 / rate;  // psi(iota) == target
  double hi = 1.0;
  while (interval_length_psi(hi, p) < target) {
    hi *= 2.0;
    if (hi > 1e15) return kNeverCrawl;  // psi is bounded when nu == 0
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (interval_length_psi(mid, p) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace crawl
