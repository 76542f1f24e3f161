#include "crawlsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "crawlsched/estimation.hpp"
#include "crawlsched/solver.hpp"

namespace crawl {

namespace {

using nlohmann::json;

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = base + 0x9E3779B97F4A7C15ull * (a + 1) + 0xBF58476D1CE4E5B9ull * (b + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

int worker_count() {
  if (const char* env = std::getenv("CRAWLSCHED_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs tasks [0, n) on a bounded pool; task order of completion does not
/// affect output because each task writes its own slot.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(worker_count(), n > 0 ? n : 1);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct CellResult {
  std::vector<double> policy_accuracy;  // one per policy
  double baseline_accuracy = 0.0;
  std::vector<std::vector<std::pair<double, double>>> rolling;  // per policy
  // First replication only:
  std::vector<std::vector<double>> empirical_rates;  // per policy, per page
  std::vector<double> baseline_rates;
  std::vector<PageParams> pages;
};

CellResult run_cell(const ExperimentConfig& cfg, int m, int rep) {
  InstanceSpec spec;
  spec.m = m;
  spec.horizon = cfg.horizon;
  spec.bandwidth = cfg.bandwidth;
  spec.delta = cfg.delta;
  spec.mu = cfg.mu;
  spec.lambda = cfg.lambda;
  spec.nu = cfg.nu;
  spec.cis_delay = cfg.cis_delay;

  const std::uint64_t base = cfg.seed + static_cast<std::uint64_t>(rep);
  Rng param_rng(mix_seed(base, m, 0));
  const std::vector<PageParams> pages = draw_page_params(spec, param_rng);
  const EventTrace trace = generate_trace(spec, pages, mix_seed(base, m, 1));
  const double r0 = cfg.bandwidth.front().rate;

  CellResult cell;
  const bool need_solver =
      cfg.baseline || std::any_of(cfg.policies.begin(), cfg.policies.end(),
                                  [](const PolicySpec& p) {
                                    return p.type == PolicySpec::Type::Lds;
                                  });
  ContinuousSolution baseline;
  if (need_solver) {
    baseline = solve_no_cis(pages, r0);
    cell.baseline_accuracy =
        continuous_accuracy(baseline, pages, ValueVariant::Greedy);
  }

  RunOptions opts;
  opts.rolling_window = cfg.rolling_window;

  for (const auto& ps : cfg.policies) {
    SimulationReport rep_out;
    if (ps.type == PolicySpec::Type::Lds) {
      LdsScheduler lds(baseline.rates, r0);
      rep_out = run_policy(trace, lds, pages, cfg.bandwidth, cfg.horizon, opts);
    } else {
      SchedulerConfig sc;
      sc.variant = ps.variant;
      sc.approx_level = ps.approx_level;
      sc.t_delay = ps.t_delay + (ps.t_delay_ticks > 0 ? ps.t_delay_ticks / r0 : 0.0);
      sc.index_mode = ps.index_mode;
      GreedyScheduler greedy(pages, sc);
      rep_out = run_policy(trace, greedy, pages, cfg.bandwidth, cfg.horizon, opts);
    }
    cell.policy_accuracy.push_back(rep_out.accuracy);
    if (cfg.rolling_window > 0) cell.rolling.push_back(std::move(rep_out.rolling));
    if (cfg.rates_output && rep == 0)
      cell.empirical_rates.push_back(std::move(rep_out.per_page_rates));
  }
  if (cfg.rates_output && rep == 0) {
    cell.baseline_rates = baseline.rates;
    cell.pages = pages;
  }
  return cell;
}

ExperimentResult run_estimate_experiment(const ExperimentConfig& cfg) {
  const int n_inst = cfg.replications;
  std::vector<EstimateRow> rows(n_inst);
  parallel_for(n_inst, [&](int i) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 2));
    const double precision = rng.uniform(0.2, 0.95);
    const double recall = rng.uniform(0.2, 0.95);
    const double delta = 1.0 / rng.uniform(2.0, 20.0);
    const double crawl_rate =
        delta * std::exp(rng.uniform(-std::log(4.0), std::log(4.0)));
    const double lam = recall;
    const double gamma = lam * delta / precision;
    const double nu = gamma - lam * delta;
    const double tau = 1.0 / crawl_rate;
    const long n_obs = static_cast<long>(cfg.horizon * crawl_rate);

    std::vector<IntervalObservation> obs;
    obs.reserve(n_obs);
    for (long k = 0; k < n_obs; ++k) {
      const long changes = rng.poisson(delta * tau);
      int cis = static_cast<int>(rng.poisson(nu * tau));
      for (long c = 0; c < changes; ++c)
        if (rng.uniform() < lam) ++cis;
      obs.push_back({tau, cis, changes > 0 ? 1 : 0});
    }

    EstimateRow row;
    row.instance = i;
    row.true_precision = precision;
    row.true_recall = recall;
    const CisQuality naive = estimate_naive(obs);
    row.naive_precision = naive.precision;
    row.naive_recall = naive.recall;
    const CisQuality mle = estimate_mle(obs);
    row.mle_precision = mle.precision;
    row.mle_recall = mle.recall;
    rows[i] = row;
  });
  ExperimentResult result;
  result.estimates = std::move(rows);
  return result;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.mode == ExperimentConfig::Mode::Estimate)
    return run_estimate_experiment(cfg);
  if (cfg.policies.empty())
    throw std::runtime_error("experiment: no policies configured");

  const int n_m = static_cast<int>(cfg.ms.size());
  const int reps = cfg.replications;
  std::vector<CellResult> cells(static_cast<std::size_t>(n_m) * reps);
  parallel_for(n_m * reps, [&](int idx) {
    cells[idx] = run_cell(cfg, cfg.ms[idx / reps], idx % reps);
  });

  ExperimentResult result;
  for (int mi = 0; mi < n_m; ++mi) {
    const int m = cfg.ms[mi];
    ReplicationStats base_stats;
    for (int r = 0; r < reps; ++r)
      base_stats.samples.push_back(cells[mi * reps + r].baseline_accuracy);

    for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
      const auto& ps = cfg.policies[pi];
      ReplicationStats acc;
      for (int r = 0; r < reps; ++r)
        acc.samples.push_back(cells[mi * reps + r].policy_accuracy[pi]);
      SummaryRow row;
      row.m = m;
      row.policy = ps.name;
      row.reps = reps;
      row.accuracy_mean = acc.mean();
      row.accuracy_se = acc.stderr_mean();
      if (cfg.baseline) {
        row.baseline_mean = base_stats.mean();
        row.baseline_se = base_stats.stderr_mean();
      } else {
        row.baseline_mean = row.baseline_se =
            std::numeric_limits<double>::quiet_NaN();
      }
      result.summary.push_back(std::move(row));

      if (cfg.rolling_window > 0) {
        for (int r = 0; r < reps; ++r)
          for (const auto& [t, a] : cells[mi * reps + r].rolling[pi])
            result.rolling.push_back({m, ps.name, r, t, a});
      }
      if (cfg.rates_output) {
        const CellResult& first = cells[mi * reps];
        for (int page = 0; page < m; ++page)
          result.rates.push_back({m, ps.name, page, first.baseline_rates[page],
                                  first.empirical_rates[pi][page],
                                  first.pages[page].lam,
                                  first.pages[page].delta});
      }
    }
  }
  return result;
}

std::vector<std::string> write_reports(const ExperimentResult& result,
                                       const ExperimentConfig& cfg,
                                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  auto open = [&](const std::string& file, const std::string& schema) {
    const std::string path = (fs::path(out_dir) / file).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# schema: " << schema << "\n";
    written.push_back(path);
    return out;
  };

  if (!result.summary.empty() || cfg.mode == ExperimentConfig::Mode::Accuracy) {
    auto out = open("summary.csv", "crawlsched.summary.v1");
    out << "m,policy,replications,accuracy_mean,accuracy_se,baseline_mean,"
           "baseline_se\n";
    for (const auto& r : result.summary)
      out << r.m << ',' << csv_field(r.policy) << ',' << r.reps << ','
          << fmt(r.accuracy_mean) << ',' << fmt(r.accuracy_se) << ','
          << fmt(r.baseline_mean) << ',' << fmt(r.baseline_se) << '\n';
  }
  if (!result.rates.empty()) {
    auto out = open("rates.csv", "crawlsched.rates.v1");
    out << "m,policy,page,baseline_rate,empirical_rate,lambda,delta\n";
    for (const auto& r : result.rates)
      out << r.m << ',' << csv_field(r.policy) << ',' << r.page << ','
          << fmt(r.baseline_rate) << ',' << fmt(r.empirical_rate) << ','
          << fmt(r.lambda) << ',' << fmt(r.delta) << '\n';
  }
  if (!result.rolling.empty()) {
    auto out = open("rolling.csv", "crawlsched.rolling.v1");
    out << "m,policy,replication,t,accuracy\n";
    for (const auto& r : result.rolling)
      out << r.m << ',' << csv_field(r.policy) << ',' << r.rep << ','
          << fmt(r.t) << ',' << fmt(r.accuracy) << '\n';
  }
  if (!result.estimates.empty()) {
    auto out = open("estimates.csv", "crawlsched.estimates.v1");
    out << "instance,true_precision,true_recall,naive_precision,naive_recall,"
           "mle_precision,mle_recall\n";
    for (const auto& r : result.estimates)
      out << r.instance << ',' << fmt(r.true_precision) << ','
          << fmt(r.true_recall) << ',' << fmt(r.naive_precision) << ','
          << fmt(r.naive_recall) << ',' << fmt(r.mle_precision) << ','
          << fmt(r.mle_recall) << '\n';
  }
  return written;
}

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw std::runtime_error("config field '" + field + "': " + what);
}

Dist parse_dist(const json& j, const std::string& field) {
  if (j.is_number()) return Dist::constant(j.get<double>());
  if (!j.is_object() || !j.contains("kind"))
    config_error(field, "expected a number or {kind, ...}");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "const") return Dist::constant(j.at("value").get<double>());
  if (kind == "uniform")
    return Dist::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  if (kind == "beta")
    return Dist::beta(j.at("a").get<double>(), j.at("b").get<double>());
  config_error(field, "unknown distribution kind '" + kind + "'");
}

ValueVariant parse_variant(const std::string& v, const std::string& field) {
  if (v == "greedy") return ValueVariant::Greedy;
  if (v == "greedy-cis") return ValueVariant::GreedyCis;
  if (v == "greedy-ncis") return ValueVariant::GreedyNcis;
  config_error(field, "unknown variant '" + v +
                          "' (expected greedy | greedy-cis | greedy-ncis)");
}

PolicySpec parse_policy(const json& j, const std::string& field) {
  PolicySpec ps;
  const std::string type = j.value("type", "greedy");
  if (type == "lds") {
    ps.type = PolicySpec::Type::Lds;
    ps.name = j.value("name", "LDS");
    return ps;
  }
  if (type != "greedy") config_error(field, "unknown policy type '" + type + "'");
  ps.variant = parse_variant(j.value("variant", "greedy"), field + ".variant");
  ps.approx_level = j.value("approx", 0);
  if (ps.approx_level < 0) config_error(field + ".approx", "must be >= 0");
  ps.t_delay = j.value("t_delay", 0.0);
  ps.t_delay_ticks = j.value("t_delay_ticks", 0.0);
  const std::string index = j.value("index", "lazy");
  if (index == "exact")
    ps.index_mode = IndexMode::Exact;
  else if (index == "lazy")
    ps.index_mode = IndexMode::Lazy;
  else
    config_error(field + ".index", "expected exact | lazy");
  if (j.contains("name")) {
    ps.name = j.at("name").get<std::string>();
  } else {
    switch (ps.variant) {
      case ValueVariant::Greedy: ps.name = "GREEDY"; break;
      case ValueVariant::GreedyCis: ps.name = "GREEDY-CIS"; break;
      case ValueVariant::GreedyNcis:
        ps.name = ps.approx_level > 0
                      ? "G-NCIS-APPROX-" + std::to_string(ps.approx_level)
                      : "GREEDY-NCIS";
        break;
    }
    if (ps.t_delay > 0.0 || ps.t_delay_ticks > 0.0) ps.name += "-D";
  }
  return ps;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  cfg.description = j.value("description", "");
  const std::string mode = j.value("mode", "accuracy");
  if (mode == "estimate")
    cfg.mode = ExperimentConfig::Mode::Estimate;
  else if (mode != "accuracy")
    config_error("mode", "expected accuracy | estimate");

  if (j.contains("m")) {
    if (j.at("m").is_array())
      cfg.ms = j.at("m").get<std::vector<int>>();
    else
      cfg.ms = {j.at("m").get<int>()};
  }
  if (cfg.ms.empty()) config_error("m", "must be nonempty");
  for (int m : cfg.ms)
    if (m <= 0) config_error("m", "page counts must be positive");

  cfg.horizon = j.value("horizon", cfg.horizon);
  if (cfg.horizon <= 0) config_error("horizon", "must be positive");

  if (j.contains("bandwidth")) {
    const auto& b = j.at("bandwidth");
    cfg.bandwidth.clear();
    if (b.is_number()) {
      cfg.bandwidth.push_back({0.0, b.get<double>()});
    } else if (b.is_array()) {
      for (const auto& step : b)
        cfg.bandwidth.push_back(
            {step.at("t").get<double>(), step.at("rate").get<double>()});
    } else {
      config_error("bandwidth", "expected a number or [{t, rate}, ...]");
    }
  }
  if (cfg.bandwidth.empty() || cfg.bandwidth.front().t != 0.0)
    config_error("bandwidth", "schedule must start at t = 0");
  for (const auto& s : cfg.bandwidth)
    if (s.rate <= 0) config_error("bandwidth", "rates must be positive");

  if (j.contains("delta")) cfg.delta = parse_dist(j.at("delta"), "delta");
  if (j.contains("mu")) cfg.mu = parse_dist(j.at("mu"), "mu");
  if (j.contains("lambda")) cfg.lambda = parse_dist(j.at("lambda"), "lambda");
  if (j.contains("nu")) cfg.nu = parse_dist(j.at("nu"), "nu");

  if (j.contains("cis_delay")) {
    const auto& d = j.at("cis_delay");
    const std::string law = d.value("law", "none");
    if (law == "none")
      cfg.cis_delay.law = DelaySpec::Law::None;
    else if (law == "poisson")
      cfg.cis_delay.law = DelaySpec::Law::Poisson;
    else if (law == "exponential")
      cfg.cis_delay.law = DelaySpec::Law::Exponential;
    else
      config_error("cis_delay.law", "expected none | poisson | exponential");
    cfg.cis_delay.mean = d.value("mean", 0.0);
    if (cfg.cis_delay.mean < 0) config_error("cis_delay.mean", "must be >= 0");
  }

  cfg.replications = j.value("replications", cfg.replications);
  if (cfg.replications < 1) config_error("replications", "must be >= 1");
  cfg.seed = j.value("seed", cfg.seed);
  cfg.baseline = j.value("baseline", cfg.baseline);
  cfg.rolling_window = j.value("rolling_window", 0);
  if (cfg.rolling_window < 0) config_error("rolling_window", "must be >= 0");
  cfg.rates_output = j.value("rates_output", false);

  cfg.policies.clear();
  if (j.contains("policies")) {
    if (!j.at("policies").is_array()) config_error("policies", "expected an array");
    int idx = 0;
    for (const auto& p : j.at("policies"))
      cfg.policies.push_back(
          parse_policy(p, "policies[" + std::to_string(idx++) + "]"));
  }
  if (cfg.mode == ExperimentConfig::Mode::Accuracy && cfg.policies.empty())
    config_error("policies", "at least one policy required");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

PolicySpec greedy_policy(ValueVariant v, int approx = 0, double delay_ticks = 0.0) {
  json j;
  j["type"] = "greedy";
  j["variant"] = v == ValueVariant::Greedy
                     ? "greedy"
                     : v == ValueVariant::GreedyCis ? "greedy-cis" : "greedy-ncis";
  if (approx > 0) j["approx"] = approx;
  if (delay_ticks > 0) j["t_delay_ticks"] = delay_ticks;
  return parse_policy(j, "preset");
}

PolicySpec lds_policy() {
  PolicySpec ps;
  ps.type = PolicySpec::Type::Lds;
  ps.name = "LDS";
  return ps;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig2", "fig3", "fig4-rates", "fig5", "fig6-rates",
          "burnin", "delay", "estimate"};
}

ExperimentConfig make_preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.replications = 20;
  if (name == "fig2") {
    cfg.description =
        "Accuracy of GREEDY and LDS vs the continuous baseline, no change "
        "signals; m sweep at R=100, T=1000.";
    cfg.ms = {100, 200, 500, 750, 1000};
    cfg.policies = {greedy_policy(ValueVariant::Greedy), lds_policy()};
  } else if (name == "fig3") {
    cfg.description =
        "GREEDY-CIS vs GREEDY with partially observable changes "
        "(lambda ~ Beta(0.25,0.25), no false positives).";
    cfg.ms = {100, 200, 500, 750, 1000};
    cfg.lambda = Dist::beta(0.25, 0.25);
    cfg.policies = {greedy_policy(ValueVariant::Greedy),
                    greedy_policy(ValueVariant::GreedyCis)};
  } else if (name == "fig4-rates") {
    cfg.description =
        "Per-page crawl rates of GREEDY-CIS against the continuous-optimum "
        "rates, colored by lambda and delta; m in {100, 300}.";
    cfg.ms = {100, 300};
    cfg.lambda = Dist::beta(0.25, 0.25);
    cfg.policies = {greedy_policy(ValueVariant::GreedyCis)};
    cfg.rates_output = true;
    cfg.replications = 1;
  } else if (name == "fig5") {
    cfg.description =
        "All greedy variants with noisy signals (lambda ~ Beta(0.25,0.25), "
        "nu ~ Unif(0.1,0.6)); m sweep up to 10000.";
    cfg.ms = {100, 200, 500, 750, 1000, 10000};
    cfg.lambda = Dist::beta(0.25, 0.25);
    cfg.nu = Dist::uniform(0.1, 0.6);
    cfg.policies = {greedy_policy(ValueVariant::Greedy),
                    greedy_policy(ValueVariant::GreedyCis),
                    greedy_policy(ValueVariant::GreedyNcis),
                    greedy_policy(ValueVariant::GreedyNcis, 1),
                    greedy_policy(ValueVariant::GreedyNcis, 2)};
  } else if (name == "fig6-rates") {
    cfg.description =
        "Per-page empirical crawl rates of GREEDY and LDS against the "
        "continuous-optimum rates, no change signals; m=100.";
    cfg.ms = {100};
    cfg.policies = {greedy_policy(ValueVariant::Greedy), lds_policy()};
    cfg.rates_output = true;
    cfg.replications = 1;
  } else if (name == "burnin") {
    cfg.description =
        "Bandwidth change adaptation: R 100 -> 150 at t=133 -> 100 at t=266, "
        "m=1000, T=400; rolling accuracy over the last 1000 crawls.";
    cfg.ms = {1000};
    cfg.horizon = 400.0;
    cfg.bandwidth = {{0.0, 100.0}, {133.0, 150.0}, {266.0, 100.0}};
    cfg.policies = {greedy_policy(ValueVariant::Greedy)};
    cfg.rolling_window = 1000;
    cfg.replications = 5;
  } else if (name == "delay") {
    cfg.description =
        "Delayed signals (Poisson delay, mean 6) with the discard window "
        "T_delay = 5/R; GREEDY-NCIS vs GREEDY-NCIS-D.";
    cfg.ms = {100, 500};
    cfg.lambda = Dist::beta(0.25, 0.25);
    cfg.nu = Dist::uniform(0.1, 0.6);
    cfg.cis_delay = {DelaySpec::Law::Poisson, 6.0};
    cfg.policies = {greedy_policy(ValueVariant::GreedyNcis),
                    greedy_policy(ValueVariant::GreedyNcis, 0, 5.0)};
  } else if (name == "estimate") {
    cfg.description =
        "Signal-quality estimation: precision, recall ~ Unif(0.2,0.95), "
        "expected change interval ~ Unif(2,20), crawl rate within 4x of the "
        "change rate, horizon 1e5; naive vs MLE per instance.";
    cfg.mode = ExperimentConfig::Mode::Estimate;
    cfg.horizon = 1e5;
    cfg.replications = 40;
    cfg.baseline = false;
  } else {
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw std::runtime_error("unknown preset '" + name +
                             "'; available: " + names);
  }
  return cfg;
}

}  // namespace crawl
