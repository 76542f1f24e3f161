#include "crawlsched/params.hpp"

#include <cmath>
#include <stdexcept>

namespace crawl {

namespace {
// Keeps beta finite when lam == 1 makes alpha vanish.
constexpr double kAlphaFloor = 1e-9;
}  // namespace

PageParams PageParams::from_raw(double delta, double mu, double lam, double nu) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::domain_error("PageParams: delta must be positive and finite");
  if (!(mu >= 0.0) || !std::isfinite(mu))
    throw std::domain_error("PageParams: mu must be nonnegative");
  if (!(lam >= 0.0 && lam <= 1.0))
    throw std::domain_error("PageParams: lam must lie in [0, 1]");
  if (!(nu >= 0.0) || !std::isfinite(nu))
    throw std::domain_error("PageParams: nu must be nonnegative");

  PageParams p;
  p.delta = delta;
  p.mu = mu;
  p.lam = lam;
  p.nu = nu;
  p.alpha = (1.0 - lam) * delta;
  p.gamma = lam * delta + nu;
  if (nu == 0.0) {
    p.beta = std::numeric_limits<double>::infinity();
  } else if (lam == 0.0) {
    p.beta = 0.0;
  } else {
    p.beta = -std::log(nu / p.gamma) / std::max(p.alpha, kAlphaFloor);
  }
  p.mu_tilde = mu;
  return p;
}

void normalize_importance(std::span<PageParams> pages) {
  double total = 0.0;
  for (const auto& p : pages) total += p.mu;
  if (total <= 0.0)
    throw std::domain_error("normalize_importance: total request rate is zero");
  for (auto& p : pages) p.mu_tilde = p.mu / total;
}

}  // namespace crawl
