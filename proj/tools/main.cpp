#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crawlsched/estimation.hpp"
#include "crawlsched/experiment.hpp"

namespace {

int run_and_report(crawl::ExperimentConfig cfg, const std::string& out_dir) {
  std::fprintf(stderr, "[%s] %s\n", cfg.name.c_str(), cfg.description.c_str());
  const crawl::ExperimentResult result = crawl::run_experiment(cfg);
  for (const auto& path : crawl::write_reports(result, cfg, out_dir))
    std::fprintf(stderr, "wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crawlsched: refresh-crawl scheduling experiments"};
  app.require_subcommand(1);

  std::string config_path, preset_name, log_path, out_dir = ".";
  std::uint64_t seed = 0;
  int reps = 0;
  bool have_seed = false, have_reps = false;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory");

  auto* preset = app.add_subcommand("preset", "Run a built-in experiment");
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_option("--seed", seed, "base seed")->each([&](const std::string&) {
    have_seed = true;
  });
  preset->add_option("--reps", reps, "replications")->each([&](const std::string&) {
    have_reps = true;
  });
  preset->add_option("--out", out_dir, "output directory");

  auto* estimate =
      app.add_subcommand("estimate", "Estimate signal quality from a log of "
                                     "\"tau n_cis z\" lines");
  estimate->add_option("log", log_path, "observation log file")->required();

  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("config", config_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_and_report(crawl::load_config(config_path), out_dir);
    }
    if (preset->parsed()) {
      crawl::ExperimentConfig cfg = crawl::make_preset(preset_name);
      if (have_seed) cfg.seed = seed;
      if (have_reps) cfg.replications = reps;
      return run_and_report(std::move(cfg), out_dir);
    }
    if (estimate->parsed()) {
      std::ifstream in(log_path);
      if (!in) throw std::runtime_error("cannot open " + log_path);
      const auto obs = crawl::read_observation_log(in);
      if (obs.empty()) throw std::runtime_error("no observations in " + log_path);
      const crawl::CisQuality naive = crawl::estimate_naive(obs);
      const crawl::MleResult fit = crawl::fit_mle(obs);
      const crawl::CisQuality mle = crawl::estimate_mle(obs);
      std::printf("observations,%zu\n", obs.size());
      std::printf("naive_precision,%.6g\nnaive_recall,%.6g\n", naive.precision,
                  naive.recall);
      std::printf("mle_alpha,%.6g\nmle_alpha_beta,%.6g\n", fit.alpha, fit.ab);
      std::printf("mle_precision,%.6g\nmle_recall,%.6g\n", mle.precision,
                  mle.recall);
      if (!fit.warning.empty())
        std::fprintf(stderr, "warning: %s\n", fit.warning.c_str());
      return 0;
    }
    if (validate->parsed()) {
      const crawl::ExperimentConfig cfg = crawl::load_config(config_path);
      std::printf("ok: %s (%zu policies, %zu page counts, %d replications)\n",
                  cfg.name.c_str(), cfg.policies.size(), cfg.ms.size(),
                  cfg.replications);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
