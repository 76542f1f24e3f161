#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crawlsched/experiment.hpp"
#include "doctest.h"

using namespace crawl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config() {
  auto cfg = parse_config(R"({
    "name": "tiny",
    "m": [5, 10],
    "horizon": 30,
    "bandwidth": 5,
    "replications": 3,
    "seed": 9,
    "lambda": {"kind": "uniform", "lo": 0.2, "hi": 0.8},
    "nu": 0.2,
    "policies": [
      {"type": "greedy", "variant": "greedy-ncis"},
      {"type": "lds"}
    ]
  })");
  return cfg;
}

}  // namespace

TEST_CASE("config: full round trip of fields") {
  const auto cfg = tiny_config();
  CHECK(cfg.name == "tiny");
  CHECK(cfg.ms == std::vector<int>{5, 10});
  CHECK(cfg.horizon == 30.0);
  REQUIRE(cfg.bandwidth.size() == 1);
  CHECK(cfg.bandwidth[0].rate == 5.0);
  CHECK(cfg.replications == 3);
  CHECK(cfg.seed == 9);
  CHECK(cfg.lambda.kind == Dist::Kind::Uniform);
  CHECK(cfg.nu.kind == Dist::Kind::Const);
  CHECK(cfg.nu.a == 0.2);
  REQUIRE(cfg.policies.size() == 2);
  CHECK(cfg.policies[0].variant == ValueVariant::GreedyNcis);
  CHECK(cfg.policies[0].name == "GREEDY-NCIS");
  CHECK(cfg.policies[1].type == PolicySpec::Type::Lds);
  CHECK(cfg.policies[1].name == "LDS");
}

TEST_CASE("config: errors point at the offending field") {
  auto expect_error = [](const std::string& json, const std::string& needle) {
    try {
      parse_config(json);
      FAIL_CHECK("expected parse failure for ", needle);
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error(R"({"policies": []})", "policies");
  expect_error(R"({"policies": [{"type": "nope"}]})", "type");
  expect_error(R"({"policies": [{"type": "greedy", "variant": "bogus"}]})",
               "variant");
  expect_error(R"({"replications": 0, "policies": [{"type": "lds"}]})",
               "replications");
  expect_error(
      R"({"bandwidth": [{"t": 5, "rate": 1}], "policies": [{"type": "lds"}]})",
      "bandwidth");
  expect_error(R"({"mode": "what", "policies": [{"type": "lds"}]})", "mode");
}

TEST_CASE("presets: names and key parameters") {
  const auto names = preset_names();
  for (const char* want :
       {"fig2", "fig3", "fig4-rates", "fig5", "fig6-rates", "burnin", "delay",
        "estimate"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());

  CHECK_THROWS_WITH_AS(make_preset("nope"),
                       doctest::Contains("fig2"), std::runtime_error);

  const auto delay = make_preset("delay");
  REQUIRE(delay.policies.size() == 2);
  CHECK(delay.cis_delay.law == DelaySpec::Law::Poisson);
  bool has_delayed = false;
  for (const auto& p : delay.policies)
    if (p.t_delay_ticks == 5.0) has_delayed = true;
  CHECK(has_delayed);

  const auto est = make_preset("estimate");
  CHECK(est.mode == ExperimentConfig::Mode::Estimate);

  const auto burnin = make_preset("burnin");
  CHECK(burnin.bandwidth.size() == 3);
  CHECK(burnin.rolling_window > 0);

  const auto fig5 = make_preset("fig5");
  CHECK(fig5.policies.size() == 5);
  CHECK(std::find(fig5.ms.begin(), fig5.ms.end(), 10000) != fig5.ms.end());

  // Every preset must parse back through its own machinery unchanged.
  for (const auto& n : names) CHECK_NOTHROW(make_preset(n));
}

TEST_CASE("experiment: summary shape and replication accounting") {
  const auto cfg = tiny_config();
  const auto res = run_experiment(cfg);
  REQUIRE(res.summary.size() == cfg.ms.size() * cfg.policies.size());
  for (const auto& row : res.summary) {
    CHECK(row.reps == 3);
    CHECK(row.accuracy_mean >= 0.0);
    CHECK(row.accuracy_mean <= 1.0);
    CHECK(row.accuracy_se >= 0.0);
    CHECK(row.baseline_mean > 0.0);
    CHECK(row.baseline_mean <= 1.0);
  }
}

TEST_CASE("experiment: a single replication reports no standard error") {
  auto cfg = tiny_config();
  cfg.ms = {5};
  cfg.replications = 1;
  const auto res = run_experiment(cfg);
  for (const auto& row : res.summary) {
    CHECK(row.reps == 1);
    CHECK(std::isnan(row.accuracy_se));
  }
}

TEST_CASE("experiment: reports are byte-identical across reruns") {
  auto cfg = tiny_config();
  cfg.rates_output = true;
  cfg.rolling_window = 50;

  const std::string dir_a = "exp_out_a", dir_b = "exp_out_b";
  const auto paths_a = write_reports(run_experiment(cfg), cfg, dir_a);
  const auto paths_b = write_reports(run_experiment(cfg), cfg, dir_b);
  REQUIRE(paths_a.size() == paths_b.size());
  REQUIRE(paths_a.size() >= 3);  // summary, rates, rolling
  for (std::size_t i = 0; i < paths_a.size(); ++i) {
    const auto a = slurp(paths_a[i]);
    CHECK(!a.empty());
    CHECK(a == slurp(paths_b[i]));
    // Versioned schema line leads every file.
    CHECK(a.rfind("# schema: crawlsched.", 0) == 0);
    std::remove(paths_a[i].c_str());
    std::remove(paths_b[i].c_str());
  }
}

TEST_CASE("experiment: estimate mode emits per-instance quality rows") {
  auto cfg = make_preset("estimate");
  cfg.replications = 4;
  cfg.horizon = 20000;
  const auto res = run_experiment(cfg);
  REQUIRE(res.estimates.size() == 4);
  for (const auto& row : res.estimates) {
    CHECK(row.true_precision >= 0.2);
    CHECK(row.true_precision <= 0.95);
    CHECK(row.true_recall >= 0.2);
    CHECK(row.true_recall <= 0.95);
    CHECK(std::abs(row.mle_precision - row.true_precision) < 0.2);
    CHECK(std::abs(row.mle_recall - row.true_recall) < 0.2);
  }
}

TEST_CASE("experiment: delayed variant tracks the no-delay run closely") {
  auto cfg = parse_config(R"({
    "m": [20],
    "horizon": 100,
    "bandwidth": 10,
    "replications": 4,
    "seed": 3,
    "lambda": {"kind": "uniform", "lo": 0.3, "hi": 0.9},
    "nu": 0.2,
    "cis_delay": {"law": "poisson", "mean": 0.06},
    "policies": [
      {"type": "greedy", "variant": "greedy-ncis"},
      {"type": "greedy", "variant": "greedy-ncis", "t_delay_ticks": 5}
    ]
  })");
  CHECK(cfg.policies[1].name == "GREEDY-NCIS-D");
  const auto res = run_experiment(cfg);
  REQUIRE(res.summary.size() == 2);
  CHECK(std::abs(res.summary[0].accuracy_mean - res.summary[1].accuracy_mean) <
        0.1);
}
