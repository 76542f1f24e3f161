#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crawlsched/estimation_types.hpp"
#include "crawlsched/params.hpp"
#include "crawlsched/rng.hpp"
#include "crawlsched/scheduler.hpp"

namespace crawl {

/// Piecewise-constant bandwidth schedule step: rate applies from time t on.
struct RStep {
  double t = 0.0;
  double rate = 0.0;
};

struct Dist {
  enum class Kind { Const, Uniform, Beta };
  Kind kind = Kind::Const;
  double a = 0.0;  ///< value (Const), lower bound (Uniform), alpha (Beta)
  double b = 0.0;  ///< upper bound (Uniform), beta (Beta)

  double sample(Rng& rng) const;
  static Dist constant(double v) { return {Kind::Const, v, 0.0}; }
  static Dist uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static Dist beta(double a, double b) { return {Kind::Beta, a, b}; }
};

struct DelaySpec {
  enum class Law { None, Poisson, Exponential };
  Law law = Law::None;
  double mean = 0.0;
};

/// Synthetic problem-instance description.
struct InstanceSpec {
  int m = 0;
  double horizon = 0.0;
  std::vector<RStep> bandwidth;  ///< sorted by t, first step at t = 0
  Dist delta = Dist::uniform(0.0, 1.0);
  Dist mu = Dist::uniform(0.0, 1.0);
  Dist lambda = Dist::constant(0.0);
  Dist nu = Dist::constant(0.0);
  DelaySpec cis_delay;
  std::uint64_t seed = 0;
};

/// Event streams for one replication. CIS times are delivery times (delays
/// already applied); the underlying change times stay available for
/// freshness accounting. Immutable once generated so that several policies
/// can share the same randomness.
struct EventTrace {
  enum Kind : std::uint8_t { Change = 0, Cis = 1, Request = 2 };
  struct Event {
    double t;
    std::int32_t page;
    Kind kind;
  };
  std::vector<Event> events;  ///< sorted by (t, kind, page)
  double horizon = 0.0;
  int m = 0;

  void sort_events();
};

std::vector<PageParams> draw_page_params(const InstanceSpec& spec, Rng& rng);

EventTrace generate_trace(const InstanceSpec& spec,
                          std::span<const PageParams> pages,
                          std::uint64_t seed);

/// Line-delimited trace format: "<time> <page> <kind>" with kind one of
/// change|cis|request.
void export_trace(const EventTrace& trace, std::ostream& out);
EventTrace import_trace(std::istream& in);

struct SimulationReport {
  double accuracy = 0.0;
  long requests = 0;
  long fresh_requests = 0;
  std::vector<long> per_page_crawls;
  std::vector<double> per_page_rates;  ///< crawls / horizon
  /// (tick time, accuracy over the requests spanned by the last W crawls);
  /// empty prefix before W crawls have happened.
  std::vector<std::pair<double, double>> rolling;
  std::vector<IntervalObservation> observations;
};

struct RunOptions {
  int rolling_window = 0;           ///< crawl events per window, 0 = off
  bool collect_observations = false;
  bool oracle_crawl_on_change = false;  ///< test hook: crawl at every change
};

/// Drives a policy over a trace: ticks at j/R (re-anchored at bandwidth
/// changes), CIS fed to the policy as they arrive, freshness measured at
/// request events.
SimulationReport run_policy(const EventTrace& trace, Policy& policy,
                            std::span<const PageParams> pages,
                            const std::vector<RStep>& bandwidth, double T,
                            const RunOptions& opts = {});

/// Replication statistics for one measured quantity.
struct ReplicationStats {
  std::vector<double> samples;
  double mean() const;
  /// Standard error of the mean; NaN with fewer than two samples.
  double stderr_mean() const;
};

/// Monte-Carlo statistics of the single-page threshold policy pi(iota):
/// used to validate psi, w and f end to end.
struct ThresholdIntervalStats {
  double mean_length = 0.0;
  double se_length = 0.0;
  double mean_freshness = 0.0;  ///< cumulative freshness per interval
  double se_freshness = 0.0;
  long intervals = 0;
};

ThresholdIntervalStats simulate_threshold_policy(const PageParams& p,
                                                 Threshold iota,
                                                 long intervals,
                                                 std::uint64_t seed);

}  // namespace crawl
