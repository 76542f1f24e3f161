#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crawlsched/scheduler.hpp"
#include "crawlsched/simulator.hpp"

namespace crawl {

/// One policy entry in an experiment. Greedy-family policies are driven by
/// the crawl-value argmax; the LDS baseline tracks the continuous rates.
struct PolicySpec {
  enum class Type { Greedy, Lds };
  std::string name;
  Type type = Type::Greedy;
  ValueVariant variant = ValueVariant::Greedy;
  int approx_level = 0;
  double t_delay = 0.0;        ///< absolute CIS discard window
  double t_delay_ticks = 0.0;  ///< window as a multiple of 1/R (initial R)
  IndexMode index_mode = IndexMode::Lazy;
};

struct ExperimentConfig {
  enum class Mode { Accuracy, Estimate };
  std::string name = "experiment";
  std::string description;
  Mode mode = Mode::Accuracy;
  std::vector<int> ms{100};
  double horizon = 1000.0;
  std::vector<RStep> bandwidth{{0.0, 100.0}};
  Dist delta = Dist::uniform(0.0, 1.0);
  Dist mu = Dist::uniform(0.0, 1.0);
  Dist lambda = Dist::constant(0.0);
  Dist nu = Dist::constant(0.0);
  DelaySpec cis_delay;
  int replications = 20;
  std::uint64_t seed = 1;
  std::vector<PolicySpec> policies;
  bool baseline = true;     ///< report the continuous-optimum accuracy
  int rolling_window = 0;   ///< emit rolling-accuracy series when > 0
  bool rates_output = false;  ///< emit the per-page rate table (first rep)
};

struct SummaryRow {
  int m = 0;
  std::string policy;
  int reps = 0;
  double accuracy_mean = 0.0, accuracy_se = 0.0;
  double baseline_mean = 0.0, baseline_se = 0.0;
};

struct RateRow {
  int m = 0;
  std::string policy;
  int page = 0;
  double baseline_rate = 0.0, empirical_rate = 0.0;
  double lambda = 0.0, delta = 0.0;
};

struct RollingRow {
  int m = 0;
  std::string policy;
  int rep = 0;
  double t = 0.0, accuracy = 0.0;
};

struct EstimateRow {
  int instance = 0;
  double true_precision = 0.0, true_recall = 0.0;
  double naive_precision = 0.0, naive_recall = 0.0;
  double mle_precision = 0.0, mle_recall = 0.0;
};

struct ExperimentResult {
  std::vector<SummaryRow> summary;
  std::vector<RateRow> rates;
  std::vector<RollingRow> rolling;
  std::vector<EstimateRow> estimates;
};

/// Runs all (m, policy, replication) cells. Replication r of instance size m
/// uses seed seed + r; every policy within a cell shares one event trace.
/// Replications run on a worker pool sized by the CRAWLSCHED_WORKERS
/// environment variable (default: hardware concurrency).
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes summary.csv and, when configured, rates.csv / rolling.csv /
/// estimates.csv under out_dir. Returns the paths written.
std::vector<std::string> write_reports(const ExperimentResult& result,
                                       const ExperimentConfig& config,
                                       const std::string& out_dir);

/// JSON config parsing; throws std::runtime_error with a field-anchored
/// message on invalid input.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

std::vector<std::string> preset_names();
/// Throws std::runtime_error listing the available names when unknown.
ExperimentConfig make_preset(const std::string& name);

}  // namespace crawl
