#include <cmath>
#include <vector>

#include "crawlsched/rng.hpp"
#include "crawlsched/solver.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace crawl;

namespace {

std::vector<PageParams> random_pages(int m, Rng& rng, bool with_cis) {
  std::vector<PageParams> pages;
  pages.reserve(m);
  for (int i = 0; i < m; ++i) {
    const double lam = with_cis ? rng.uniform() : 0.0;
    const double nu = with_cis ? 0.05 + 0.5 * rng.uniform() : 0.0;
    pages.push_back(PageParams::from_raw(0.05 + rng.uniform(),
                                         0.05 + rng.uniform(), lam, nu));
  }
  normalize_importance(pages);
  return pages;
}

double total_objective_no_cis(std::span<const PageParams> pages,
                              std::span<const double> rates) {
  double obj = 0.0;
  for (std::size_t i = 0; i < pages.size(); ++i)
    obj += objective_g(rates[i], pages[i].mu_tilde, pages[i].delta);
  return obj;
}

}  // namespace

TEST_CASE("solver: identical pages share the budget evenly") {
  for (int m : {4, 10}) {
    std::vector<PageParams> pages(m, PageParams::from_raw(1.0, 1.0, 0.5, 0.5));
    normalize_importance(pages);
    const double R = 7.5;

    const auto nc = solve_no_cis(pages, R);
    const auto kk = solve_kkt(pages, R, ValueVariant::GreedyNcis);
    for (int i = 0; i < m; ++i) {
      CHECK(nc.rates[i] == doctest::Approx(R / m).epsilon(1e-7));
      CHECK(kk.rates[i] == doctest::Approx(R / m).epsilon(1e-6));
      CHECK(kk.iotas[i] == doctest::Approx(kk.iotas[0]).epsilon(1e-9));
    }
    CHECK(nc.achieved_bandwidth == doctest::Approx(R).epsilon(1e-9));
    CHECK(kk.achieved_bandwidth == doctest::Approx(R).epsilon(1e-6));
  }
}

TEST_CASE("solver: single page gets the whole budget") {
  std::vector<PageParams> pages{PageParams::from_raw(1.0, 1.0, 0.0, 0.0)};
  normalize_importance(pages);
  const double R = 3.0;
  const auto sol = solve_no_cis(pages, R);
  CHECK(sol.rates[0] == doctest::Approx(R).epsilon(1e-9));
  // Multiplier equals the marginal value at the assigned rate.
  CHECK(sol.lambda_mult ==
        doctest::Approx(objective_g_prime(R, 1.0, 1.0)).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(objective_g(R, 1.0, 1.0)).epsilon(1e-9));
}

TEST_CASE("solver: m=2 matches a brute-force grid search") {
  std::vector<PageParams> pages{PageParams::from_raw(1.3, 2.0, 0.0, 0.0),
                                PageParams::from_raw(0.4, 1.0, 0.0, 0.0)};
  normalize_importance(pages);
  const double R = 1.7;
  const auto sol = solve_no_cis(pages, R);

  double best = -1.0, best_x = 0.0;
  for (double x = 0.0; x <= R; x += 1e-5 * R) {
    const std::vector<double> rates{x, R - x};
    const double obj = total_objective_no_cis(pages, rates);
    if (obj > best) {
      best = obj;
      best_x = x;
    }
  }
  CHECK(sol.rates[0] == doctest::Approx(best_x).epsilon(2e-4));
  CHECK(sol.objective >= best - 1e-6);
  CHECK(sol.objective <= best + 1e-6);
}

TEST_CASE("solver: no-CIS specialization agrees with the KKT path") {
  Rng rng(42);
  for (int inst = 0; inst < 20; ++inst) {
    const int m = 2 + static_cast<int>(rng.uniform() * 12);
    const auto pages = random_pages(m, rng, false);
    const double R = 0.3 * m * (0.2 + rng.uniform());
    const auto nc = solve_no_cis(pages, R);
    const auto kk = solve_kkt(pages, R, ValueVariant::Greedy);
    for (int i = 0; i < m; ++i)
      CHECK(nc.rates[i] == doctest::Approx(kk.rates[i]).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("solver: KKT conditions hold on random CIS instances") {
  Rng rng(4242);
  for (int inst = 0; inst < 12; ++inst) {
    const int m = 2 + static_cast<int>(rng.uniform() * 10);
    const auto pages = random_pages(m, rng, true);
    const double R = 0.3 * m * (0.2 + rng.uniform());
    const auto sol = solve_kkt(pages, R, ValueVariant::GreedyNcis);

    // Budget feasibility.
    CHECK(sol.achieved_bandwidth == doctest::Approx(R).epsilon(1e-6));
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      total += sol.rates[i];
      if (std::isinf(sol.iotas[i])) {
        // Exclusion rule: only pages whose supremum falls short sit out.
        CHECK(pages[i].mu_tilde / pages[i].delta <= sol.lambda_mult * (1 + 1e-9));
        CHECK(sol.rates[i] == 0.0);
      } else {
        // Stationarity: active pages share one crawl value.
        CHECK(crawl_value(sol.iotas[i], pages[i], ValueVariant::GreedyNcis) ==
              doctest::Approx(sol.lambda_mult).epsilon(1e-6));
        CHECK(sol.rates[i] ==
              doctest::Approx(frequency_f(sol.iotas[i], pages[i]))
                  .epsilon(1e-9));
      }
    }
    CHECK(total == doctest::Approx(R).epsilon(1e-6));
  }
}

TEST_CASE("solver: objective responds monotonically to the budget") {
  Rng rng(5);
  const auto pages = random_pages(8, rng, true);
  const double R = 2.0;
  const auto a = solve_kkt(pages, R, ValueVariant::GreedyNcis);
  const auto b = solve_kkt(pages, 1.5 * R, ValueVariant::GreedyNcis);
  CHECK(b.objective > a.objective);
  CHECK(b.lambda_mult < a.lambda_mult);

  const auto na = solve_no_cis(pages, R);
  const auto nb = solve_no_cis(pages, 1.5 * R);
  CHECK(nb.objective > na.objective);
}

TEST_CASE("solver: min_rate floor is honored") {
  Rng rng(6);
  auto pages = random_pages(6, rng, false);
  // Make one page nearly worthless so it would otherwise starve.
  pages[0] = PageParams::from_raw(50.0, 1e-6, 0.0, 0.0);
  normalize_importance(pages);

  SolverOptions opts;
  opts.min_rate = 0.05;
  const auto sol = solve_no_cis(pages, 3.0, opts);
  for (double r : sol.rates) CHECK(r >= opts.min_rate - 1e-12);
  CHECK(sol.achieved_bandwidth == doctest::Approx(3.0).epsilon(1e-6));

  // Without the floor the weak page gets (essentially) nothing.
  const auto bare = solve_no_cis(pages, 3.0);
  CHECK(bare.rates[0] < 1e-3);
}

TEST_CASE("solver: continuous accuracy") {
  // Single page crawled at rate xi = delta = 1: accuracy G(1)/mu_tilde.
  std::vector<PageParams> one{PageParams::from_raw(1.0, 1.0, 0.0, 0.0)};
  normalize_importance(one);
  const auto sol = solve_no_cis(one, 1.0);
  CHECK(continuous_accuracy(sol, one) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));

  // A huge budget pushes accuracy toward 1.
  const auto rich = solve_no_cis(one, 1e4);
  CHECK(continuous_accuracy(rich, one) > 0.9999);

  // CIS-aware evaluation of a KKT solution stays within [0, 1].
  Rng rng(7);
  const auto pages = random_pages(6, rng, true);
  const auto kk = solve_kkt(pages, 2.0, ValueVariant::GreedyNcis);
  const double acc = continuous_accuracy(kk, pages, ValueVariant::GreedyNcis);
  CHECK(acc > 0.0);
  CHECK(acc <= 1.0);
}
