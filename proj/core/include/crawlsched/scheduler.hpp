#pragma once

#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "crawlsched/value.hpp"

namespace crawl {

/// Per-page scheduler state. The effective elapsed time at time t is
/// (t - last_crawl) + beta * cis_count.
struct PageState {
  double last_crawl = 0.0;
  int cis_count = 0;
};

enum class IndexMode { Exact, Lazy };

struct SchedulerConfig {
  ValueVariant variant = ValueVariant::Greedy;
  int approx_level = 0;     ///< > 0 truncates the NCIS value series
  double t_delay = 0.0;     ///< discard CIS arriving within this window of a crawl
  IndexMode index_mode = IndexMode::Exact;
};

/// Discrete crawl policy: one page per tick.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void on_cis(int page, double t) {}
  /// Picks the page to crawl at tick time t and applies the crawl to its
  /// internal state. Returns the page index.
  virtual int select(double t) = 0;
};

/// Argmax-of-crawl-value scheduler (the discrete policy derived from the
/// continuous optimum). Exact mode recomputes every value each tick; lazy
/// mode keeps sleeping pages on a wake-time heap and produces a
/// bit-identical decision sequence.
class GreedyScheduler : public Policy {
 public:
  GreedyScheduler(std::span<const PageParams> pages, SchedulerConfig config,
                  double start_time = 0.0);

  void on_cis(int page, double t) override;
  int select(double t) override;

  /// Registers a page mid-run; its last crawl is set to the arrival time.
  int add_page(const PageParams& params, double t);

  double value_of(int page, double t) const;
  const PageState& state(int page) const { return states_[page]; }
  int page_count() const { return static_cast<int>(params_.size()); }

  /// Total crawl-value evaluations (instrumentation for the lazy index).
  std::int64_t eval_count() const { return evals_; }
  std::int64_t eval_count(int page) const { return per_page_evals_[page]; }

 private:
  int select_exact(double t);
  int select_lazy(double t);
  void sleep_or_keep_awake(int page, double t);
  double wake_time_for(int page) const;
  void wake_all();

  std::vector<PageParams> params_;
  std::vector<PageState> states_;
  SchedulerConfig config_;

  // Lazy index bookkeeping.
  struct HeapEntry {
    double wake;
    std::uint64_t version;
    int page;
    bool operator>(const HeapEntry& o) const { return wake > o.wake; }
  };
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap_;
  std::vector<char> awake_;
  std::vector<int> active_;
  std::vector<std::uint64_t> version_;
  double threshold_est_ = -1.0;  ///< lower bound on future winning values
  double recent_min_win_ = 0.0;  ///< min winning value in the current window
  int window_count_ = 0;

  // Memoized invert_value(threshold_est_) per page; valid while the cached
  // threshold matches.
  mutable std::vector<double> wake_tau_cache_;
  mutable std::vector<double> wake_tau_thresh_;

  mutable std::int64_t evals_ = 0;
  mutable std::vector<std::int64_t> per_page_evals_;
};

/// Rate-tracking baseline: at each tick crawls the page with the largest
/// crawl deficit xi_i * t - count_i. Keeps |count_i(T) - xi_i * T| <= 1.
class LdsScheduler : public Policy {
 public:
  /// Rates must sum to the tick bandwidth R (relative tolerance 1e-6).
  LdsScheduler(std::vector<double> rates, double R);

  int select(double t) override;
  long count(int page) const { return counts_[page]; }

 private:
  std::vector<double> rates_;
  std::vector<long> counts_;
};

}  // namespace crawl
