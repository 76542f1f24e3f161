#include <benchmark/benchmark.h>

#include "crawlsched/rng.hpp"
#include "crawlsched/scheduler.hpp"
#include "crawlsched/simulator.hpp"
#include "crawlsched/solver.hpp"
#include "crawlsched/value.hpp"

namespace {

std::vector<crawl::PageParams> make_pages(int m, bool cis, std::uint64_t seed) {
  crawl::InstanceSpec spec;
  spec.m = m;
  if (cis) {
    spec.lambda = crawl::Dist::beta(0.25, 0.25);
    spec.nu = crawl::Dist::uniform(0.1, 0.6);
  }
  crawl::Rng rng(seed);
  return crawl::draw_page_params(spec, rng);
}

void BM_Residual(benchmark::State& state) {
  const int i = static_cast<int>(state.range(0));
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(crawl::residual(i, x));
    x += 1e-6;
  }
}
BENCHMARK(BM_Residual)->Arg(1)->Arg(16)->Arg(256);

void BM_CrawlValueNcis(benchmark::State& state) {
  const auto pages = make_pages(1, true, 7);
  double iota = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(crawl::crawl_value(
        iota, pages[0], crawl::ValueVariant::GreedyNcis));
    iota += 1e-6;
  }
}
BENCHMARK(BM_CrawlValueNcis);

void BM_SolveNoCis(benchmark::State& state) {
  const auto pages = make_pages(static_cast<int>(state.range(0)), false, 11);
  for (auto _ : state)
    benchmark::DoNotOptimize(crawl::solve_no_cis(pages, 100.0));
}
BENCHMARK(BM_SolveNoCis)->Arg(100)->Arg(1000);

void BM_SolveKkt(benchmark::State& state) {
  const auto pages = make_pages(static_cast<int>(state.range(0)), true, 13);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        crawl::solve_kkt(pages, 100.0, crawl::ValueVariant::GreedyNcis));
}
BENCHMARK(BM_SolveKkt)->Arg(100)->Arg(500);

void BM_Ticks(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const bool lazy = state.range(1) != 0;
  const auto pages = make_pages(m, true, 17);
  for (auto _ : state) {
    state.PauseTiming();
    crawl::SchedulerConfig cfg;
    cfg.variant = crawl::ValueVariant::GreedyNcis;
    cfg.index_mode = lazy ? crawl::IndexMode::Lazy : crawl::IndexMode::Exact;
    crawl::GreedyScheduler sched(pages, cfg);
    state.ResumeTiming();
    double t = 0.0;
    for (int j = 0; j < 1000; ++j) {
      t += 0.01;
      benchmark::DoNotOptimize(sched.select(t));
    }
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Ticks)->Args({100, 0})->Args({100, 1})->Args({1000, 0})->Args({1000, 1});

}  // namespace

BENCHMARK_MAIN();
