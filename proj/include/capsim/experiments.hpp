#pragma once

#include <cstdint>
#include <vector>

#include "capsim/conjugacy.hpp"
#include "capsim/offspring.hpp"
#include "capsim/simulate.hpp"

namespace capsim {

// One replicate at capacity k, observed at the horizon n1 = [log_rho k]:
//   error_new    = Zbar_{n1} - H(Ybar_{n1}), the conjugacy prediction
//   error_legacy = Zbar_{n1} - f^{n1-nc}(Ybar_{nc}), the mid-path push
// where nc = [c log_rho k] for a cut fraction c in (1/2, 1).
struct ErrorSample {
  double k = 0.0;
  int replicate = 0;
  double w_hat = 0.0;
  double error_new = 0.0;
  double error_legacy = 0.0;
  bool z_extinct = false;
  bool y_extinct = false;
};

// The generation at which the legacy scheme switches from observation to
// deterministic iteration; values of c outside (1/2, 1) are rejected.
int legacy_cut(double c, int n1, double frac);

ErrorSample error_sample(const OffspringModel& model,
                         const ConjugacyEvaluator& h, double k, double c,
                         std::uint64_t seed, int replicate, int w_extra = 0);

struct RateConfig {
  std::vector<double> k_grid;
  int replicates = 2000;
  double c = 0.625;
  std::vector<double> quantile_levels = {0.5, 0.9};
  std::uint64_t master_seed = 20240817;
  int w_extra = 0;
  int threads = 1;
};

// Per-capacity summary.  Quantiles of |error| are reported both conditional
// on envelope survival at the horizon and unconditionally; the extinction
// atom at zero makes the unconditional quantiles degenerate whenever the
// survival probability is near 1/2, so rate fitting uses the conditional
// ones.  Vectors align with RateConfig::quantile_levels.
struct RatePoint {
  double k = 0.0;
  int n1 = 0;
  int replicates = 0;
  int survivors = 0;
  bool undersampled = false;  // fewer than 30 surviving replicates
  std::vector<double> q_new_cond;
  std::vector<double> q_legacy_cond;
  std::vector<double> q_new_all;
  std::vector<double> q_legacy_all;
};

// Least-squares slope of log q against log k.  Needs at least four
// capacities and strictly positive quantiles, otherwise valid is false.
struct SlopeFit {
  double slope = 0.0;
  double se = 0.0;
  bool valid = false;
};

struct RateReport {
  RateConfig config;
  std::vector<RatePoint> points;
  SlopeFit slope_new;
  SlopeFit slope_legacy;
  std::vector<ErrorSample> samples;
};

RateReport rate_experiment(const OffspringModel& model,
                           const ConjugacyEvaluator& h,
                           const RateConfig& config);

// Type-7 empirical quantiles (sorted-order linear interpolation) of the
// given values at the given levels.
std::vector<double> sample_quantiles(std::vector<double> values,
                                     const std::vector<double>& levels);

SlopeFit fit_log_slope(const std::vector<double>& k,
                       const std::vector<double>& q);

// Extinction probability of the unconstrained process: the smallest fixed
// point of the offspring generating function at density zero.
double gw_extinction_prob(const OffspringModel& model, double tol = 1e-12);

struct ExtinctionComparison {
  double empirical = 0.0;
  double theoretical = 0.0;
  double se = 0.0;  // binomial standard error at the theoretical value
  int replicates = 0;
};

// Monte Carlo extinction frequency of the envelope by generation n_steps
// against the fixed-point value.
ExtinctionComparison compare_extinction(const OffspringModel& model,
                                        int n_steps, int replicates,
                                        std::uint64_t master_seed);

}  // namespace capsim
