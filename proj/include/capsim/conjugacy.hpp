#pragma once

#include <vector>

#include "capsim/offspring.hpp"

namespace capsim {

// Orbit of the deterministic reproduction map: x_0, f(x_0), ..., f^n(x_0).
std::vector<double> iterate_map(const OffspringModel& model, double x0, int n);

// The conjugacy H(x) = lim_n f^n(x / rho^n), which straightens f into
// multiplication by rho near the origin: H(x) = f(H(x / rho)).

// Successive approximants H_1(x), H_2(x), ... up to the Cauchy stopping
// rule |H_{n+1} - H_n| <= tol (1 - 1/rho); the returned vector ends with
// the accepted value.  Throws convergence_error past the iteration cap.
std::vector<double> h_iterates(const OffspringModel& model, double x,
                               double tol, int cap = 200);

double h_eval(const OffspringModel& model, double x, double tol = 1e-10);
// d/dx H as the truncated product prod_j f'(H(x rho^{-j})) / rho.
double h_prime(const OffspringModel& model, double x, double tol = 1e-10);
// d^2/dx^2 H as the tail-bounded series paired with the product above.
double h_second(const OffspringModel& model, double x, double tol = 1e-10);

// |H(x) - f(H(x/rho))|, evaluating both sides fresh; direct measure of how
// well the computed limit satisfies its defining equation.
double semiconjugacy_residual(const OffspringModel& model, double x,
                              double tol = 1e-10);

// Tabulated H, H', H'' on a uniform grid with monotone cubic interpolation
// between nodes.  Construction certifies the basic identities (H(0) = 0,
// H'(0) = 1, 1-Lipschitz increments, semiconjugacy residual on the grid,
// geometric decay of the defining iterates) and records the prefix of the
// grid on which H is certified strictly increasing, i.e. invertible.
class ConjugacyEvaluator {
 public:
  static ConjugacyEvaluator build(const OffspringModel& model,
                                  double x_max = 4.0, double step = 0.01,
                                  double tol = 1e-10);

  // Interpolated H; queries beyond x_max fall back to direct evaluation so
  // results never depend on the table edge.
  double h_at(double x) const;
  double h_prime_at(double x) const;
  double h_second_at(double x) const;

  // Inverse of H on the certified prefix, by bisection to 1e-12 in x.
  double h_inverse(double y) const;

  const OffspringModel& model() const { return model_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& h_values() const { return h_; }
  const std::vector<double>& h_prime_values() const { return hp_; }
  const std::vector<double>& h_second_values() const { return hpp_; }
  double x_max() const { return grid_.back(); }
  double step() const { return step_; }
  double tol() const { return tol_; }
  double invertible_upper() const { return invertible_upper_; }

 private:
  explicit ConjugacyEvaluator(OffspringModel model) : model_(model) {}
  std::size_t locate(double x) const;

  OffspringModel model_;
  double step_ = 0;
  double tol_ = 0;
  double invertible_upper_ = 0;
  std::vector<double> grid_, h_, hp_, hpp_;
  std::vector<double> slope_;  // interpolation slopes, monotonicity-limited
};

}  // namespace capsim
