#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capsim/rng.hpp"

namespace capsim {

enum class Family {
  geometric,
  ricker,
  binary_splitting,
  density_independent,
};

const char* family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

// One-generation offspring law p_l(x) parameterized by the current density
// x = Z/K.  Every family is normalized so the mean at density 0 is rho and,
// for the density-dependent families, the mean at density 1 is 1 (density 1
// is the carrying capacity).
//
//   geometric            p_l(x) = q(x)^l (1-q(x)),
//                        q(x) = rho/(1+rho) * exp(-x * log(2 rho/(1+rho)))
//   ricker               p_l(x) = q_l e^{-gamma x} for l >= 1, rest of the
//                        mass on 0; gamma = log rho, q_l Poisson(rho)
//   binary_splitting     p_2(x) = rho^{1-x}/2, p_0 = 1 - p_2, rho in (1,2]
//   density_independent  constant law on {floor(rho), floor(rho)+1} with
//                        mean exactly rho; the reproduction map is linear
class OffspringModel {
 public:
  static OffspringModel geometric(double rho);
  static OffspringModel ricker(double rho);
  static OffspringModel binary_splitting(double rho);
  static OffspringModel density_independent(double rho);

  Family family() const { return family_; }
  double rho() const { return rho_; }

  double pmf(double x, std::int64_t ell) const;
  double cdf(double x, double t) const;
  // Generalized inverse min{t >= 0 : cdf(x, t) >= u}, the coupling map.
  std::int64_t quantile(double x, double u) const;

  double mean(double x) const;
  double variance(double x) const;
  double second_moment(double x) const;

  // f(x) = x * mean(x) and its first two derivatives, in closed form.
  double reproduction_map(double x) const;
  double f_prime(double x) const;
  double f_second(double x) const;
  // sup over x >= 0 of |f''(x)|; steers series truncation depths.
  double f_second_sup() const { return f2sup_; }
  // True when f is exactly linear (the density-independent family), in
  // which case the conjugacy is the identity.
  bool linear_reproduction() const {
    return family_ == Family::density_independent;
  }

  // Sum of z i.i.d. offspring draws at density x in O(1) via the family's
  // aggregate law.  Only for uncoupled simulation; coupled paths must draw
  // per individual through quantile().
  std::int64_t sample_generation_sum(std::int64_t z, double x,
                                     Philox& rng) const;

  // Base-law tail P(X > t) for the ricker family (internal to sampling).
  double ricker_tail(std::int64_t t) const;

 private:
  OffspringModel(Family f, double rho) : family_(f), rho_(rho) {}
  void compute_f_second_sup();

  Family family_;
  double rho_;
  // geometric
  double q0_ = 0, beta_ = 0;
  // ricker / binary_splitting
  double gamma_ = 0;
  std::shared_ptr<const std::vector<double>> base_pmf_;   // ricker q_l
  std::shared_ptr<const std::vector<double>> base_tail_;  // P(X > l)
  // density_independent
  std::int64_t lo_count_ = 0;
  double theta_ = 0;
  double f2sup_ = 0;
};

// Offspring sampler at a fixed density: precomputes the per-density
// constants once so the per-individual draw inside simulation loops stays
// cheap.  Draws agree exactly with model.quantile(x, u).
class OffspringSampler {
 public:
  OffspringSampler(const OffspringModel& model, double x);
  std::int64_t operator()(double u) const;

 private:
  const OffspringModel* model_;
  Family family_;
  double q_ = 0, logq_ = 0;  // geometric
  double a_ = 0;             // ricker thinning factor e^{-gamma x}
  double cdf0_ = 0;          // two-point families: cdf at first atom
  std::int64_t lo_count_ = 0;
  double theta_ = 0;
};

struct AssumptionReport {
  Family family;
  double rho = 0;
  double x_max = 0;
  double step = 0;
  std::int64_t t_max = 0;
  // monotone stochastic order: higher density never produces stochastically
  // more offspring
  bool a1_ok = false;
  double a1_worst_violation = 0;
  // Lipschitz second moment
  double a2_lipschitz_estimate = 0;
  // smooth reproduction map with its derivative maximal at 0
  bool a3_ok = false;
  double a3_sup_f_prime = 0;
  double a3_f_prime_zero = 0;
};

AssumptionReport validate_assumptions(const OffspringModel& model,
                                      double x_max = 3.0, double step = 0.05,
                                      std::int64_t t_max = 200,
                                      double tol = 1e-9);

std::string format_report(const AssumptionReport& report);

}  // namespace capsim
