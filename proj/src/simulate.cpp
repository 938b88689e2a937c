#include "capsim/simulate.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "capsim/errors.hpp"

namespace capsim {

Horizon horizon(double k, double rho) {
  if (!(k >= 2.0)) throw std::domain_error("horizon: capacity must be >= 2");
  if (!(rho > 1.0))
    throw std::domain_error("horizon: growth rate must exceed 1");
  double t = std::log(k) / std::log(rho);
  double snapped = std::round(t);
  // exact powers of rho land on an integer number of generations; guard the
  // floor against the last-bit noise of the two logarithms
  if (std::abs(t - snapped) < 1e-9 * std::max(1.0, std::abs(t)))
    return {static_cast<int>(snapped), 0.0};
  return {static_cast<int>(std::floor(t)), t - std::floor(t)};
}

namespace {

void check_cap(std::uint64_t value, std::uint64_t cap, int generation) {
  if (value > cap) {
    std::ostringstream msg;
    msg << "population " << value << " exceeded cap " << cap
        << " at generation " << generation;
    throw population_overflow(msg.str());
  }
}

}  // namespace

CoupledPath simulate_coupled(const OffspringModel& model, double k,
                             int n_steps, std::uint64_t seed,
                             int y_extra_steps, std::uint64_t z0,
                             std::uint64_t population_cap) {
  if (!(k > 0.0)) throw std::domain_error("simulate_coupled: capacity <= 0");
  if (n_steps < 0 || y_extra_steps < 0)
    throw std::domain_error("simulate_coupled: negative step count");

  CoupledPath path;
  path.capacity = k;
  path.seed = seed;
  path.z.assign(static_cast<std::size_t>(n_steps) + 1, 0);
  path.y.assign(static_cast<std::size_t>(n_steps + y_extra_steps) + 1, 0);
  path.z[0] = z0;
  path.y[0] = z0;
  if (z0 == 0) {
    path.extinct_z_at = 0;
    path.extinct_y_at = 0;
    return path;
  }

  Philox rng(seed, 0);
  const OffspringSampler free_sampler(model, 0.0);

  for (int n = 1; n <= n_steps; ++n) {
    std::uint64_t zp = path.z[n - 1];
    std::uint64_t yp = path.y[n - 1];
    if (yp == 0) break;  // the envelope dominates, so z is gone too
    const OffspringSampler crowded_sampler(model, static_cast<double>(zp) / k);
    std::uint64_t zn = 0, yn = 0;
    for (std::uint64_t j = 0; j < yp; ++j) {
      double u = rng.uniform();
      yn += free_sampler(u);
      // individuals present in both processes reuse the same uniform, which
      // is what makes the envelope an almost-sure upper bound
      if (j < zp) zn += crowded_sampler(u);
    }
    check_cap(yn, population_cap, n);
    path.z[n] = zn;
    path.y[n] = yn;
    if (zn == 0 && path.extinct_z_at < 0) path.extinct_z_at = n;
    if (yn == 0 && path.extinct_y_at < 0) path.extinct_y_at = n;
  }
  for (int n = n_steps + 1; n <= n_steps + y_extra_steps; ++n) {
    std::uint64_t yp = path.y[n - 1];
    if (yp == 0) break;
    std::uint64_t yn = 0;
    for (std::uint64_t j = 0; j < yp; ++j) yn += free_sampler(rng.uniform());
    check_cap(yn, population_cap, n);
    path.y[n] = yn;
    if (yn == 0 && path.extinct_y_at < 0) path.extinct_y_at = n;
  }
  return path;
}

double estimate_w(const CoupledPath& path, double rho, int n) {
  if (n < 0 || static_cast<std::size_t>(n) >= path.y.size())
    throw std::domain_error("estimate_w: generation outside the path");
  return static_cast<double>(path.y[static_cast<std::size_t>(n)]) /
         std::pow(rho, static_cast<double>(n));
}

std::vector<std::uint64_t> simulate_aggregate(const OffspringModel& model,
                                              double k, int n_steps,
                                              std::uint64_t seed,
                                              std::uint64_t z0,
                                              std::uint64_t population_cap) {
  if (!(k > 0.0)) throw std::domain_error("simulate_aggregate: capacity <= 0");
  if (n_steps < 0)
    throw std::domain_error("simulate_aggregate: negative step count");
  std::vector<std::uint64_t> z(static_cast<std::size_t>(n_steps) + 1, 0);
  z[0] = z0;
  Philox rng(seed, 0);
  for (int n = 1; n <= n_steps; ++n) {
    std::uint64_t zp = z[n - 1];
    if (zp == 0) break;
    std::uint64_t zn =
        model.sample_generation_sum(zp, static_cast<double>(zp) / k, rng);
    check_cap(zn, population_cap, n);
    z[static_cast<std::size_t>(n)] = zn;
  }
  return z;
}

std::vector<double> gaussian_fluctuation_path(const OffspringModel& model,
                                              double x0, int n, Philox& rng) {
  if (!(x0 >= 0.0))
    throw std::domain_error("gaussian_fluctuation_path: x0 must be >= 0");
  if (n < 0)
    throw std::domain_error("gaussian_fluctuation_path: n must be >= 0");
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  double x = x0;
  for (int i = 1; i <= n; ++i) {
    double drift = model.f_prime(x);
    double diff = std::sqrt(x * model.variance(x));
    v[static_cast<std::size_t>(i)] =
        drift * v[static_cast<std::size_t>(i) - 1] + diff * rng.normal();
    x = model.reproduction_map(x);
  }
  return v;
}

std::vector<double> fluctuation_variance(const OffspringModel& model,
                                         double x0, int n) {
  if (!(x0 >= 0.0))
    throw std::domain_error("fluctuation_variance: x0 must be >= 0");
  if (n < 0) throw std::domain_error("fluctuation_variance: n must be >= 0");
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  double x = x0;
  for (int i = 1; i <= n; ++i) {
    double drift = model.f_prime(x);
    v[static_cast<std::size_t>(i)] =
        drift * drift * v[static_cast<std::size_t>(i) - 1] +
        x * model.variance(x);
    x = model.reproduction_map(x);
  }
  return v;
}

}  // namespace capsim
