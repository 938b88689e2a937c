#include "capsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "capsim/errors.hpp"

namespace capsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size() || std::isnan(d))
      throw config_error("not a number: '" + v + "'", key, line);
    return d;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("not a number: '" + v + "'", key, line);
  }
}

long long parse_int(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t used = 0;
    long long n = std::stoll(v, &used);
    if (used != v.size())
      throw config_error("not an integer: '" + v + "'", key, line);
    return n;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("not an integer: '" + v + "'", key, line);
  }
}

std::uint64_t parse_uint(const std::string& v, const std::string& key,
                         int line) {
  long long n = parse_int(v, key, line);
  if (n < 0) throw config_error("must be non-negative", key, line);
  return static_cast<std::uint64_t>(n);
}

std::vector<double> parse_list(const std::string& v, const std::string& key,
                               int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw config_error("empty list element", key, line);
    out.push_back(parse_double(item, key, line));
  }
  if (out.empty()) throw config_error("empty list", key, line);
  return out;
}

void set_value(Config& cfg, const std::string& section, const std::string& key,
               const std::string& value, int line) {
  auto full = section + "." + key;
  if (section == "model") {
    if (key == "family") {
      auto fam = family_from_name(value);
      if (!fam) throw config_error("unknown family '" + value + "'", full, line);
      cfg.family = *fam;
    } else if (key == "rho") {
      cfg.rho = parse_double(value, full, line);
    } else {
      throw config_error("unknown key", full, line);
    }
  } else if (section == "conjugacy") {
    if (key == "x_max")
      cfg.conjugacy.x_max = parse_double(value, full, line);
    else if (key == "step")
      cfg.conjugacy.step = parse_double(value, full, line);
    else if (key == "tol")
      cfg.conjugacy.tol = parse_double(value, full, line);
    else
      throw config_error("unknown key", full, line);
  } else if (section == "simulate") {
    if (key == "k")
      cfg.simulate.k = parse_double(value, full, line);
    else if (key == "steps")
      cfg.simulate.steps = static_cast<int>(parse_int(value, full, line));
    else if (key == "replicates")
      cfg.simulate.replicates = static_cast<int>(parse_int(value, full, line));
    else if (key == "seed")
      cfg.simulate.seed = parse_uint(value, full, line);
    else if (key == "population_cap")
      cfg.simulate.population_cap = parse_uint(value, full, line);
    else if (key == "z0")
      cfg.simulate.z0 = parse_uint(value, full, line);
    else if (key == "y_extra")
      cfg.simulate.y_extra = static_cast<int>(parse_int(value, full, line));
    else
      throw config_error("unknown key", full, line);
  } else if (section == "experiment") {
    if (key == "k_grid")
      cfg.experiment.k_grid = parse_list(value, full, line);
    else if (key == "replicates")
      cfg.experiment.replicates =
          static_cast<int>(parse_int(value, full, line));
    else if (key == "c")
      cfg.experiment.c = parse_double(value, full, line);
    else if (key == "quantile_levels")
      cfg.experiment.quantile_levels = parse_list(value, full, line);
    else if (key == "master_seed")
      cfg.experiment.master_seed = parse_uint(value, full, line);
    else if (key == "w_extra")
      cfg.experiment.w_extra = static_cast<int>(parse_int(value, full, line));
    else if (key == "threads")
      cfg.experiment.threads = static_cast<int>(parse_int(value, full, line));
    else if (key == "output_dir")
      cfg.experiment.output_dir = value;
    else
      throw config_error("unknown key", full, line);
  } else if (section == "validate") {
    if (key == "x_max")
      cfg.validate.x_max = parse_double(value, full, line);
    else if (key == "step")
      cfg.validate.step = parse_double(value, full, line);
    else if (key == "t_max")
      cfg.validate.t_max = static_cast<int>(parse_int(value, full, line));
    else if (key == "tol")
      cfg.validate.tol = parse_double(value, full, line);
    else
      throw config_error("unknown key", full, line);
  } else {
    throw config_error("unknown section", section, line);
  }
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

Config parse_config(std::istream& in) {
  Config cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw config_error("unterminated section header", t, lineno);
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw config_error("empty section name", t, lineno);
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("expected key = value", t, lineno);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw config_error("empty key", t, lineno);
    if (section.empty())
      throw config_error("key before any [section]", key, lineno);
    set_value(cfg, section, key, value, lineno);
  }
  check_invariants(cfg);
  return cfg;
}

void check_invariants(const Config& cfg) {
  auto fail = [](const std::string& what, const std::string& key) {
    throw config_error(what, key, 0);
  };
  if (!(cfg.rho > 1.0)) fail("rho must exceed 1", "model.rho");
  if (!(cfg.conjugacy.tol > 0.0)) fail("tol must be positive", "conjugacy.tol");
  if (!(cfg.conjugacy.step > 0.0) || cfg.conjugacy.step > cfg.conjugacy.x_max)
    fail("need 0 < step <= x_max", "conjugacy.step");
  if (cfg.simulate.replicates < 1)
    fail("need at least one replicate", "simulate.replicates");
  if (cfg.simulate.steps < -1)
    fail("steps is a count or -1 for the horizon", "simulate.steps");
  if (cfg.simulate.y_extra < 0)
    fail("must be non-negative", "simulate.y_extra");
  const auto& grid = cfg.experiment.k_grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 2.0)) fail("capacities must be >= 2", "experiment.k_grid");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      fail("must be strictly ascending", "experiment.k_grid");
  }
  if (!(cfg.experiment.c > 0.5) || !(cfg.experiment.c < 1.0))
    fail("c must lie in the open interval (1/2, 1)", "experiment.c");
  for (double q : cfg.experiment.quantile_levels)
    if (!(q >= 0.0) || !(q <= 1.0))
      fail("levels must lie in [0, 1]", "experiment.quantile_levels");
  if (cfg.experiment.replicates < 1)
    fail("need at least one replicate", "experiment.replicates");
  if (cfg.experiment.threads < 1)
    fail("need at least one thread", "experiment.threads");
  if (cfg.experiment.w_extra < 0)
    fail("must be non-negative", "experiment.w_extra");
  if (!(cfg.validate.step > 0.0) || cfg.validate.step > cfg.validate.x_max)
    fail("need 0 < step <= x_max", "validate.step");
  if (cfg.validate.t_max < 1) fail("t_max must be >= 1", "validate.t_max");
  if (!(cfg.validate.tol > 0.0)) fail("tol must be positive", "validate.tol");
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file", path, 0);
  return parse_config(in);
}

void apply_override(Config& cfg, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw config_error("override must be section.key=value", assignment, 0);
  std::string path = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  std::size_t dot = path.find('.');
  if (dot == std::string::npos)
    throw config_error("override must be section.key=value", assignment, 0);
  set_value(cfg, path.substr(0, dot), path.substr(dot + 1), value, 0);
}

std::string render_config(const Config& cfg) {
  std::ostringstream out;
  out << "[model]\n";
  out << "family = " << family_name(cfg.family) << "\n";
  out << "rho = " << fmt(cfg.rho) << "\n\n";
  out << "[conjugacy]\n";
  out << "x_max = " << fmt(cfg.conjugacy.x_max) << "\n";
  out << "step = " << fmt(cfg.conjugacy.step) << "\n";
  out << "tol = " << fmt(cfg.conjugacy.tol) << "\n\n";
  out << "[simulate]\n";
  out << "k = " << fmt(cfg.simulate.k) << "\n";
  out << "steps = " << cfg.simulate.steps << "\n";
  out << "replicates = " << cfg.simulate.replicates << "\n";
  out << "seed = " << cfg.simulate.seed << "\n";
  out << "population_cap = " << cfg.simulate.population_cap << "\n";
  out << "z0 = " << cfg.simulate.z0 << "\n";
  out << "y_extra = " << cfg.simulate.y_extra << "\n\n";
  out << "[experiment]\n";
  out << "k_grid = " << fmt_list(cfg.experiment.k_grid) << "\n";
  out << "replicates = " << cfg.experiment.replicates << "\n";
  out << "c = " << fmt(cfg.experiment.c) << "\n";
  out << "quantile_levels = " << fmt_list(cfg.experiment.quantile_levels)
      << "\n";
  out << "master_seed = " << cfg.experiment.master_seed << "\n";
  out << "w_extra = " << cfg.experiment.w_extra << "\n";
  out << "threads = " << cfg.experiment.threads << "\n";
  out << "output_dir = " << cfg.experiment.output_dir << "\n\n";
  out << "[validate]\n";
  out << "x_max = " << fmt(cfg.validate.x_max) << "\n";
  out << "step = " << fmt(cfg.validate.step) << "\n";
  out << "t_max = " << cfg.validate.t_max << "\n";
  out << "tol = " << fmt(cfg.validate.tol) << "\n";
  return out.str();
}

OffspringModel make_model(const Config& cfg) {
  switch (cfg.family) {
    case Family::geometric:
      return OffspringModel::geometric(cfg.rho);
    case Family::ricker:
      return OffspringModel::ricker(cfg.rho);
    case Family::binary_splitting:
      return OffspringModel::binary_splitting(cfg.rho);
    case Family::density_independent:
      return OffspringModel::density_independent(cfg.rho);
  }
  throw config_error("unknown family value", "model.family", 0);
}

}  // namespace capsim
