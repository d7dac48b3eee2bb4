// homcrb <experiment> --config cfg.json --out out.csv --seed N --workers N
//
// Exit codes: 0 success, 1 property check failed, 2 config error,
// 3 degenerate model, 4 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "homcrb/csv.hpp"
#include "homcrb/error.hpp"
#include "homcrb/harness.hpp"
#include "homcrb/log.hpp"

namespace {

int exit_code(homcrb::ErrorCode code) {
  using homcrb::ErrorCode;
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Shape:
    case ErrorCode::Dimension:
      return 2;
    case ErrorCode::DegenerateModel:
    case ErrorCode::DegenerateSeed:
    case ErrorCode::Subalgebra:
    case ErrorCode::NotReductive:
    case ErrorCode::BasisClosure:
      return 3;
    default:
      return 4;
  }
}

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 0;
};

}  // namespace

int main(int argc, char** argv) {
  homcrb::init_logging();
  CLI::App app{"Fisher information and Cramer-Rao bounds on homogeneous spaces"};
  app.require_subcommand(1);

  Options opts;
  bool seed_given = false;
  const std::pair<const char*, const char*> commands[] = {
      {"landmark", "SE(3) landmark pose campaign"},
      {"network", "SE(2)^N sensor network campaign"},
      {"spd", "GL(n)+/SO(n) covariance campaign"},
      {"crb-report", "Tabulate the variance bound per m"},
      {"check", "Run the property suite"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "CSV output path (default: config output_path or stdout)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { opts.seed = s; seed_given = true; },
        "Base seed (overrides the config)");
    sub->add_option("--workers", opts.workers, "Worker threads (overrides the config)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    homcrb::ExperimentConfig config = opts.config.empty()
                                          ? homcrb::ExperimentConfig{}
                                          : homcrb::ExperimentConfig::from_file(opts.config);
    config.experiment = homcrb::experiment_kind_from_string(command);
    if (seed_given) config.seed = opts.seed;
    if (opts.workers > 0) config.workers = opts.workers;
    if (!opts.out.empty()) config.output_path = opts.out;
    config.validate();

    const homcrb::ExperimentReport report = homcrb::run_experiment(config);
    if (config.output_path.empty()) {
      homcrb::write_csv(std::cout, report, config);
    } else {
      std::ofstream out(config.output_path, std::ios::binary);
      if (!out) throw homcrb::Error(homcrb::ErrorCode::Config, "cannot write " + config.output_path);
      homcrb::write_csv(out, report, config);
    }
    if (config.experiment == homcrb::ExperimentKind::PropertySuite) {
      std::cerr << (report.n_checks - report.n_failed_checks) << "/" << report.n_checks
                << " checks passed\n";
      if (!report.passed()) return 1;
    }
    return 0;
  } catch (const homcrb::Error& e) {
    std::cerr << "homcrb " << command << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "homcrb " << command << ": " << e.what() << "\n";
    return 4;
  }
}
