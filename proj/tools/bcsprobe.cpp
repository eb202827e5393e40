#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bcsprobe/cli/commands.hpp"

using namespace bcsprobe;

int main(int argc, char** argv) {
  CLI::App app{"Impurity probe of a crossover Fermi superfluid: sweeps, curves and validation"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<double> epsilon;
  int threads = 1;
  std::string format;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_option("--epsilon", epsilon, "broadening in E_F (overrides numerics.epsilon)");
  app.add_option("--threads", threads, "worker threads for independent scan points")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "csv or json (overrides output.formats)")->check(CLI::IsMember({"csv", "json"}));

  auto* eos_cmd = app.add_subcommand("eos", "gap, chemical potential and sound speed across the crossover");
  auto* disp_cmd = app.add_subcommand("dispersion", "collective mode, pair threshold and spectral weight against q");
  auto* dsf_cmd = app.add_subcommand("dsf-grid", "structure factor and response on a (q, nu) grid");
  auto* gamma_cmd = app.add_subcommand("gamma", "impurity decay rate against trap frequency");
  auto* val_cmd = app.add_subcommand("validate", "sum rules, identities, two-route and decoupling checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::exit_ok : cli::exit_config;
  }

  cli::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = cli::load_config(config_path);
    if (epsilon) {
      if (!(*epsilon > 0.0)) throw cli::ConfigError("--epsilon must be positive");
      cfg.numerics.epsilon = *epsilon;
    }
    if (!out_dir.empty()) cfg.output.directory = out_dir;
    if (!format.empty()) cfg.output.formats = {format};
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::exit_config;
  }

  cli::CommandResult result;
  std::string report_stem = "report";
  try {
    if (*eos_cmd) {
      result = cli::cmd_eos(cfg);
    } else if (*disp_cmd) {
      result = cli::cmd_dispersion(cfg, threads);
    } else if (*dsf_cmd) {
      result = cli::cmd_dsf_grid(cfg, threads);
    } else if (*gamma_cmd) {
      result = cli::cmd_gamma(cfg, threads);
    } else if (*val_cmd) {
      result = cli::cmd_validate(cfg);
      report_stem = "validate_report";
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return cli::exit_numerical;
  } catch (const DomainError& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return cli::exit_config;
  }

  try {
    for (const auto& p : cli::write_result(result, cfg.output.directory, cfg.output.formats, report_stem))
      std::cout << p.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "cannot write output: " << e.what() << "\n";
    return cli::exit_config;
  }

  if (result.report) {
    for (const auto& c : result.report->at("checks")) {
      std::cout << (c.at("passed").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << "  value="
                << c.at("value").dump() << "  tol=" << c.at("tolerance").dump() << "  " << c.at("detail").get<std::string>()
                << "\n";
    }
  }
  return result.exit_code;
}
