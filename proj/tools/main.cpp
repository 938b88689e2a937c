#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capsim/config.hpp"
#include "capsim/conjugacy.hpp"
#include "capsim/csv.hpp"
#include "capsim/errors.hpp"
#include "capsim/experiments.hpp"
#include "capsim/offspring.hpp"
#include "capsim/rng.hpp"
#include "capsim/simulate.hpp"

namespace {

using capsim::Config;
using capsim::format_double;

std::string out_path(const Config& cfg, const std::string& name) {
  std::filesystem::path dir(cfg.experiment.output_dir);
  if (!dir.empty()) std::filesystem::create_directories(dir);
  return (dir / name).string();
}

int run_validate(const Config& cfg, const std::string& csv_path) {
  auto model = capsim::make_model(cfg);
  auto rep =
      capsim::validate_assumptions(model, cfg.validate.x_max,
                                   cfg.validate.step, cfg.validate.t_max,
                                   cfg.validate.tol);
  std::cout << capsim::format_report(rep);
  if (!csv_path.empty()) {
    capsim::CsvWriter w(csv_path);
    w.line("metric,value");
    w.line(std::string("family,") + capsim::family_name(rep.family));
    w.line("rho," + format_double(rep.rho));
    w.line("x_max," + format_double(rep.x_max));
    w.line("step," + format_double(rep.step));
    w.line("t_max," + std::to_string(rep.t_max));
    w.line("a1_ok," + std::to_string(rep.a1_ok ? 1 : 0));
    w.line("a1_worst_violation," + format_double(rep.a1_worst_violation));
    w.line("a2_lipschitz_estimate," +
           format_double(rep.a2_lipschitz_estimate));
    w.line("a3_ok," + std::to_string(rep.a3_ok ? 1 : 0));
    w.line("a3_sup_f_prime," + format_double(rep.a3_sup_f_prime));
    w.line("a3_f_prime_zero," + format_double(rep.a3_f_prime_zero));
    w.close();
    std::cout << "wrote " << csv_path << " (11 rows)\n";
  }
  return 0;
}

int run_conjugacy(const Config& cfg) {
  auto model = capsim::make_model(cfg);
  auto ev = capsim::ConjugacyEvaluator::build(model, cfg.conjugacy.x_max,
                                              cfg.conjugacy.step,
                                              cfg.conjugacy.tol);
  std::string path = out_path(cfg, "conjugacy.csv");
  capsim::CsvWriter w(path);
  std::ostringstream meta;
  meta << "family=" << capsim::family_name(model.family())
       << " rho=" << format_double(model.rho())
       << " tol=" << format_double(ev.tol())
       << " invertible_upper=" << format_double(ev.invertible_upper());
  w.comment(meta.str());
  w.line("x,H,H',H'',residual");
  const auto& grid = ev.grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double res =
        capsim::semiconjugacy_residual(model, grid[i], cfg.conjugacy.tol);
    std::ostringstream row;
    row << format_double(grid[i]) << ',' << format_double(ev.h_values()[i])
        << ',' << format_double(ev.h_prime_values()[i]) << ','
        << format_double(ev.h_second_values()[i]) << ','
        << format_double(res);
    w.line(row.str());
  }
  w.close();
  std::cout << "wrote " << path << " (" << grid.size() << " rows)\n";
  return 0;
}

int run_simulate(const Config& cfg) {
  auto model = capsim::make_model(cfg);
  int steps = cfg.simulate.steps >= 0
                  ? cfg.simulate.steps
                  : capsim::horizon(cfg.simulate.k, model.rho()).n1;
  std::string path = out_path(cfg, "simulate.csv");
  capsim::CsvWriter w(path);
  std::ostringstream meta;
  meta << "family=" << capsim::family_name(model.family())
       << " rho=" << format_double(model.rho())
       << " k=" << format_double(cfg.simulate.k) << " steps=" << steps
       << " seed=" << cfg.simulate.seed << " z0=" << cfg.simulate.z0;
  w.comment(meta.str());
  w.line("replicate,n,Z,Y,Zbar,Ybar");
  for (int r = 0; r < cfg.simulate.replicates; ++r) {
    std::uint64_t seed = capsim::derive_seed(cfg.simulate.seed, 0,
                                             static_cast<std::uint64_t>(r));
    auto p = capsim::simulate_coupled(model, cfg.simulate.k, steps, seed,
                                      cfg.simulate.y_extra, cfg.simulate.z0,
                                      cfg.simulate.population_cap);
    for (int n = 0; n <= steps; ++n) {
      std::ostringstream row;
      auto z = p.z[static_cast<std::size_t>(n)];
      auto y = p.y[static_cast<std::size_t>(n)];
      row << r << ',' << n << ',' << z << ',' << y << ','
          << format_double(static_cast<double>(z) / cfg.simulate.k) << ','
          << format_double(static_cast<double>(y) / cfg.simulate.k);
      w.line(row.str());
    }
  }
  w.close();
  std::cout << "wrote " << path << " ("
            << cfg.simulate.replicates * (steps + 1) << " rows)\n";
  return 0;
}

int run_experiment(const Config& cfg) {
  auto model = capsim::make_model(cfg);
  auto ev = capsim::ConjugacyEvaluator::build(model, cfg.conjugacy.x_max,
                                              cfg.conjugacy.step,
                                              cfg.conjugacy.tol);
  capsim::RateConfig rc;
  rc.k_grid = cfg.experiment.k_grid;
  rc.replicates = cfg.experiment.replicates;
  rc.c = cfg.experiment.c;
  rc.quantile_levels = cfg.experiment.quantile_levels;
  rc.master_seed = cfg.experiment.master_seed;
  rc.w_extra = cfg.experiment.w_extra;
  rc.threads = cfg.experiment.threads;
  auto report = capsim::rate_experiment(model, ev, rc);

  std::string samples = out_path(cfg, "samples.csv");
  capsim::write_error_samples_csv(samples, model, report);
  std::cout << "wrote " << samples << " (" << report.samples.size()
            << " rows)\n";

  std::string rate = out_path(cfg, "rate_report.csv");
  capsim::write_rate_report_csv(rate, model, report);
  std::ostringstream sum;
  sum << "wrote " << rate << "; slope_new=";
  if (report.slope_new.valid)
    sum << format_double(report.slope_new.slope) << " (se "
        << format_double(report.slope_new.se) << ")";
  else
    sum << "n/a";
  sum << ", slope_legacy=";
  if (report.slope_legacy.valid)
    sum << format_double(report.slope_legacy.slope) << " (se "
        << format_double(report.slope_legacy.se) << ")";
  else
    sum << "n/a";
  std::cout << sum.str() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density-regulated branching process toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "INI config file");
  app.add_option("--set", overrides,
                 "override a config key, e.g. --set experiment.replicates=500")
      ->take_all();
  app.add_option("--out", out_dir, "output directory for CSV files");
  auto* seed_opt = app.add_option(
      "--seed", seed, "seed override for both simulation and experiment");

  auto* cmd_validate =
      app.add_subcommand("validate", "check the model assumptions on a grid");
  std::string validate_csv;
  cmd_validate->add_option("--csv", validate_csv,
                           "also write the report to this CSV path");
  auto* cmd_conjugacy = app.add_subcommand(
      "conjugacy", "tabulate the conjugacy H, its derivatives and residuals");
  auto* cmd_simulate =
      app.add_subcommand("simulate", "run coupled replicate paths");
  auto* cmd_experiment = app.add_subcommand(
      "experiment", "error-rate comparison across the capacity grid");
  for (auto* c : {cmd_validate, cmd_conjugacy, cmd_simulate, cmd_experiment})
    c->fallthrough();

  CLI11_PARSE(app, argc, argv);
  seed_given = seed_opt->count() > 0;

  try {
    Config cfg;
    if (!config_path.empty()) cfg = capsim::load_config(config_path);
    for (const auto& s : overrides) capsim::apply_override(cfg, s);
    if (seed_given) {
      cfg.simulate.seed = seed;
      cfg.experiment.master_seed = seed;
    }
    if (!out_dir.empty()) cfg.experiment.output_dir = out_dir;
    capsim::check_invariants(cfg);

    if (cmd_validate->parsed()) return run_validate(cfg, validate_csv);
    if (cmd_conjugacy->parsed()) return run_conjugacy(cfg);
    if (cmd_simulate->parsed()) return run_simulate(cfg);
    if (cmd_experiment->parsed()) return run_experiment(cfg);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const capsim::config_error& e) {
    std::cerr << "config error";
    if (!e.key.empty()) std::cerr << " [" << e.key << "]";
    if (e.line > 0) std::cerr << " (line " << e.line << ")";
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
