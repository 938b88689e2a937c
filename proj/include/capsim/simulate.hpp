#pragma once

#include <cstdint>
#include <vector>

#include "capsim/offspring.hpp"
#include "capsim/rng.hpp"

namespace capsim {

// Observation horizon for a habitat of capacity k: the number of
// generations after which the deterministic profile reaches the capacity
// scale, split into the integer part n1 and the fractional remainder of
// log_rho k.  Exact powers of rho snap to frac == 0.
struct Horizon {
  int n1;
  double frac;
};

Horizon horizon(double k, double rho);

// One realisation of the coupled pair: z is the density-regulated
// population, y the free-running envelope started from the same ancestors
// and driven by the same per-individual uniforms, so z[n] <= y[n] holds
// path by path.  Extinction indices are -1 when the process never died.
struct CoupledPath {
  double capacity = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> z;
  std::vector<std::uint64_t> y;
  int extinct_z_at = -1;
  int extinct_y_at = -1;
};

// Simulates n_steps generations of the coupled pair.  y_extra_steps
// extends the envelope alone beyond the shared horizon.  Throws
// population_overflow if either process exceeds population_cap.
CoupledPath simulate_coupled(const OffspringModel& model, double k,
                             int n_steps, std::uint64_t seed,
                             int y_extra_steps = 0, std::uint64_t z0 = 1,
                             std::uint64_t population_cap = 100000000ULL);

// The natural-scale martingale estimate y[n] / rho^n.
double estimate_w(const CoupledPath& path, double rho, int n);

// Generation sums drawn in one shot per generation from the exact
// aggregate law instead of individual by individual.  No envelope and no
// coupling, but orders of magnitude faster when populations are large.
// Passing an infinite capacity makes the density argument exactly zero,
// which reduces this to the unconstrained branching process.
std::vector<std::uint64_t> simulate_aggregate(
    const OffspringModel& model, double k, int n_steps, std::uint64_t seed,
    std::uint64_t z0 = 1, std::uint64_t population_cap = 100000000ULL);

// Centred Gaussian recursion riding the deterministic profile from x0:
//   V_n = f'(x_{n-1}) V_{n-1} + sqrt(x_{n-1} sigma^2(x_{n-1})) W_n,
// the distributional limit of sqrt(k) (Zbar_n - x_n).  Returns V_0..V_n.
std::vector<double> gaussian_fluctuation_path(const OffspringModel& model,
                                              double x0, int n, Philox& rng);

// The variance sequence of that recursion, computed deterministically:
//   v_n = f'(x_{n-1})^2 v_{n-1} + x_{n-1} sigma^2(x_{n-1}).
std::vector<double> fluctuation_variance(const OffspringModel& model,
                                         double x0, int n);

}  // namespace capsim
