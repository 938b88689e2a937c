#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "capsim/offspring.hpp"

namespace capsim {

// All tool settings in one struct, filled from an INI-style file:
// [section] headers, key = value lines, # or ; comments.  Every field has
// a usable default, so an empty file is a valid config.
struct Config {
  Family family = Family::geometric;
  double rho = 2.0;

  struct Conjugacy {
    double x_max = 4.0;
    double step = 0.01;
    double tol = 1e-10;
  } conjugacy;

  struct Simulate {
    double k = 1024.0;
    int steps = -1;  // -1 means the horizon n1(k)
    int replicates = 10;
    std::uint64_t seed = 1;
    std::uint64_t population_cap = 100000000;
    std::uint64_t z0 = 1;
    int y_extra = 0;
  } simulate;

  struct Experiment {
    std::vector<double> k_grid = {1024.0,  4096.0,   16384.0,
                                  65536.0, 262144.0, 1048576.0};
    int replicates = 2000;
    double c = 0.625;
    std::vector<double> quantile_levels = {0.5, 0.9};
    std::uint64_t master_seed = 20240817;
    int w_extra = 0;
    int threads = 1;
    std::string output_dir = ".";
  } experiment;

  struct Validate {
    double x_max = 3.0;
    double step = 0.05;
    int t_max = 200;
    double tol = 1e-9;
  } validate;
};

Config parse_config(std::istream& in);
Config load_config(const std::string& path);

// Cross-field sanity: rho > 1, positive tolerances and steps, strictly
// ascending k_grid, c inside the open interval (1/2, 1), and so on.
// parse_config runs this automatically; callers mutating a Config through
// apply_override should run it again once all overrides are in.
void check_invariants(const Config& cfg);

// One "section.key=value" assignment, same keys as the file.
void apply_override(Config& cfg, const std::string& assignment);

// Serializes the full config; parse_config(render_config(c)) == c.
std::string render_config(const Config& cfg);

OffspringModel make_model(const Config& cfg);

}  // namespace capsim
