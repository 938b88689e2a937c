#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "capsim/config.hpp"
#include "capsim/csv.hpp"
#include "capsim/errors.hpp"
#include "capsim/experiments.hpp"

using capsim::Config;
using capsim::config_error;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
  std::istringstream empty("");
  Config cfg = capsim::parse_config(empty);
  CHECK(cfg.family == capsim::Family::geometric);
  CHECK(cfg.rho == 2.0);
  CHECK(cfg.conjugacy.x_max == 4.0);
  CHECK(cfg.conjugacy.tol == 1e-10);
  CHECK(cfg.experiment.c == 0.625);
  CHECK(cfg.experiment.replicates == 2000);
  CHECK(cfg.experiment.k_grid.size() == 6);
  CHECK(cfg.experiment.k_grid.front() == 1024.0);
  CHECK(cfg.experiment.k_grid.back() == 1048576.0);
  CHECK(cfg.experiment.quantile_levels ==
        std::vector<double>{0.5, 0.9});
  CHECK(cfg.simulate.steps == -1);
  CHECK(cfg.validate.t_max == 200);
}

TEST_CASE("full file parses into every section") {
  std::istringstream in(
      "# comment\n"
      "[model]\n"
      "family = ricker\n"
      "rho = 2.5\n"
      ";another comment\n"
      "[conjugacy]\n"
      "x_max = 3\n"
      "step = 0.02\n"
      "tol = 1e-9\n"
      "[simulate]\n"
      "k = 4096\n"
      "steps = 12\n"
      "replicates = 7\n"
      "seed = 99\n"
      "population_cap = 1000000\n"
      "z0 = 2\n"
      "y_extra = 3\n"
      "[experiment]\n"
      "k_grid = 64, 256, 1024, 4096\n"
      "replicates = 100\n"
      "c = 0.7\n"
      "quantile_levels = 0.25,0.5,0.75\n"
      "master_seed = 31337\n"
      "w_extra = 10\n"
      "threads = 4\n"
      "output_dir = /tmp/out\n"
      "[validate]\n"
      "x_max = 2.5\n"
      "step = 0.1\n"
      "t_max = 150\n"
      "tol = 1e-8\n");
  Config cfg = capsim::parse_config(in);
  CHECK(cfg.family == capsim::Family::ricker);
  CHECK(cfg.rho == 2.5);
  CHECK(cfg.conjugacy.step == 0.02);
  CHECK(cfg.simulate.k == 4096.0);
  CHECK(cfg.simulate.steps == 12);
  CHECK(cfg.simulate.z0 == 2);
  CHECK(cfg.simulate.y_extra == 3);
  CHECK(cfg.experiment.k_grid ==
        std::vector<double>{64.0, 256.0, 1024.0, 4096.0});
  CHECK(cfg.experiment.quantile_levels ==
        std::vector<double>{0.25, 0.5, 0.75});
  CHECK(cfg.experiment.threads == 4);
  CHECK(cfg.experiment.output_dir == "/tmp/out");
  CHECK(cfg.validate.t_max == 150);
  CHECK(cfg.validate.tol == 1e-8);
}

TEST_CASE("config text round-trips through render and parse") {
  Config cfg;
  cfg.family = capsim::Family::binary_splitting;
  cfg.rho = 1.75;
  cfg.experiment.k_grid = {100.0, 1000.0, 10000.0, 100000.0};
  cfg.experiment.master_seed = 5;
  cfg.conjugacy.tol = 2.5e-11;
  std::string once = capsim::render_config(cfg);
  std::istringstream in(once);
  Config back = capsim::parse_config(in);
  CHECK(capsim::render_config(back) == once);
  CHECK(back.rho == 1.75);
  CHECK(back.conjugacy.tol == 2.5e-11);
  CHECK(back.experiment.k_grid == cfg.experiment.k_grid);
}

TEST_CASE("parse errors carry the key and line number") {
  auto expect_error = [](const std::string& text, int line) {
    std::istringstream in(text);
    try {
      capsim::parse_config(in);
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.line == line);
      CHECK(!std::string(e.what()).empty());
    }
  };
  expect_error("[model]\nfamily = klingon\n", 2);
  expect_error("[model]\nrho = fast\n", 2);
  expect_error("[warp]\nspeed = 9\n", 2);
  expect_error("[model]\nwarp = 9\n", 2);
  expect_error("rho = 2\n", 1);                       // key before section
  expect_error("[experiment]\nk_grid = 1,,4\n", 2);   // empty list element
  expect_error("[model\nrho = 2\n", 1);               // unterminated header
  expect_error("[simulate]\nseed = -4\n", 2);         // negative unsigned
  CHECK_THROWS_AS(capsim::load_config("/nonexistent/capsim.ini"),
                  config_error);
}

TEST_CASE("cross-field invariants reject bad values at parse time") {
  auto reject = [](const std::string& text, const std::string& key_part) {
    std::istringstream in(text);
    try {
      capsim::parse_config(in);
      FAIL("expected config_error for: ", text);
    } catch (const config_error& e) {
      CHECK(e.key.find(key_part) != std::string::npos);
    }
  };
  reject("[model]\nrho = 0.9\n", "rho");
  reject("[model]\nrho = 1.0\n", "rho");
  reject("[experiment]\nc = 0.5\n", "c");
  reject("[experiment]\nc = 1.0\n", "c");
  reject("[experiment]\nk_grid = 1024,512\n", "k_grid");
  reject("[experiment]\nk_grid = 1024,1024\n", "k_grid");
  reject("[experiment]\nthreads = 0\n", "threads");
  reject("[conjugacy]\ntol = 0\n", "tol");
  reject("[experiment]\nquantile_levels = 0.5,1.5\n", "quantile_levels");
  // boundary-legal values parse
  std::istringstream ok("[experiment]\nc = 0.51\n[model]\nrho = 1.01\n");
  CHECK(capsim::parse_config(ok).experiment.c == 0.51);
}

TEST_CASE("overrides use dotted keys") {
  Config cfg;
  capsim::apply_override(cfg, "experiment.replicates=500");
  CHECK(cfg.experiment.replicates == 500);
  capsim::apply_override(cfg, "model.family = density_independent");
  CHECK(cfg.family == capsim::Family::density_independent);
  capsim::apply_override(cfg, "experiment.k_grid=32,64");
  CHECK(cfg.experiment.k_grid == std::vector<double>{32.0, 64.0});
  CHECK_THROWS_AS(capsim::apply_override(cfg, "replicates=500"), config_error);
  CHECK_THROWS_AS(capsim::apply_override(cfg, "experiment.replicates"),
                  config_error);
  CHECK_THROWS_AS(capsim::apply_override(cfg, "experiment.bogus=1"),
                  config_error);
}

TEST_CASE("make_model maps the family and growth rate") {
  Config cfg;
  cfg.family = capsim::Family::ricker;
  cfg.rho = 2.5;
  auto m = capsim::make_model(cfg);
  CHECK(m.family() == capsim::Family::ricker);
  CHECK(m.rho() == 2.5);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(capsim::format_double(0.5) == "0.5");
  CHECK(capsim::format_double(1024.0) == "1024");
  CHECK(capsim::format_double(1e-10) == "1e-10");
  CHECK(capsim::format_double(0.0) == "0");
  for (double v : {0.1, 1.0 / 3.0, 0.1 + 0.2, 6.02214076e23, -1.7e-300}) {
    CHECK(std::stod(capsim::format_double(v)) == v);
  }
}

TEST_CASE("csv writer replaces atomically on close") {
  auto dir = std::filesystem::temp_directory_path();
  auto target = (dir / "capsim_writer_test.csv").string();
  std::filesystem::remove(target);
  {
    capsim::CsvWriter w(target);
    w.comment("meta");
    w.line("a,b");
    w.line("1,2");
    CHECK_FALSE(std::filesystem::exists(target));  // nothing until close
    w.close();
  }
  CHECK(slurp(target) == "# meta\na,b\n1,2\n");
  CHECK_FALSE(std::filesystem::exists(target + ".tmp"));
  {
    capsim::CsvWriter w(target);
    w.line("abandoned");
    // destroyed without close: target keeps its old content
  }
  CHECK(slurp(target) == "# meta\na,b\n1,2\n");
  CHECK_FALSE(std::filesystem::exists(target + ".tmp"));
  std::filesystem::remove(target);
}

TEST_CASE("experiment csv outputs are byte-stable") {
  auto m = capsim::OffspringModel::geometric(2.0);
  auto h = capsim::ConjugacyEvaluator::build(m, 4.0, 0.01, 1e-10);
  capsim::RateConfig rc;
  rc.k_grid = {64.0, 128.0, 256.0, 512.0};
  rc.replicates = 50;
  rc.master_seed = 7;
  auto report = capsim::rate_experiment(m, h, rc);

  auto dir = std::filesystem::temp_directory_path();
  auto s1 = (dir / "capsim_samples_1.csv").string();
  auto s2 = (dir / "capsim_samples_2.csv").string();
  auto r1 = (dir / "capsim_rate_1.csv").string();
  auto r2 = (dir / "capsim_rate_2.csv").string();
  capsim::write_error_samples_csv(s1, m, report);
  capsim::write_rate_report_csv(r1, m, report);
  auto report2 = capsim::rate_experiment(m, h, rc);
  capsim::write_error_samples_csv(s2, m, report2);
  capsim::write_rate_report_csv(r2, m, report2);

  CHECK(slurp(s1) == slurp(s2));
  CHECK(slurp(r1) == slurp(r2));

  std::string samples = slurp(s1);
  CHECK(samples.find("k,replicate,w_hat,error_new,error_legacy,extinct_z,"
                     "extinct_y") != std::string::npos);
  // 2 comments + header + 200 rows
  CHECK(std::count(samples.begin(), samples.end(), '\n') == 203);
  std::string rate = slurp(r1);
  CHECK(rate.find("slope_new:") != std::string::npos);
  // 5 comments + header + 4 capacities x 2 levels
  CHECK(std::count(rate.begin(), rate.end(), '\n') == 14);
  for (auto& p : {s1, s2, r1, r2}) std::filesystem::remove(p);
}
