#include "capsim/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "capsim/errors.hpp"

namespace capsim {

namespace {

double pow_int(double base, int n) {
  double r = 1.0, b = base;
  for (int e = n; e > 0; e >>= 1) {
    if (e & 1) r *= b;
    b *= b;
  }
  return r;
}

// f^n(x / rho^n), the n-th approximant of H.
double approximant(const OffspringModel& m, double x, int n) {
  double w = x / pow_int(m.rho(), n);
  for (int i = 0; i < n; ++i) w = m.reproduction_map(w);
  return w;
}

// Truncation depth for the derivative product: the proof's tail estimate
// bounds the discarded log-factors by C x rho^{-j} / (rho - 1) with
// C = 2 sup|f''| / rho.
int product_depth(const OffspringModel& m, double x, double tol) {
  double rho = m.rho();
  double c = 2.0 * m.f_second_sup() / rho;
  double bound = c * x / (rho - 1.0);
  int j = 0;
  while (bound >= tol && j < 400) {
    bound /= rho;
    ++j;
  }
  return j;
}

// Truncation depth for the curvature series: terms are bounded by
// sup|f''| rho^{-i-1}, so the tail past I is below sup|f''|
// rho^{-I-2}/(1 - 1/rho).
int series_depth(const OffspringModel& m, double tol) {
  double rho = m.rho();
  double bound = m.f_second_sup() / (pow_int(rho, 2) * (1.0 - 1.0 / rho));
  int i = 1;
  while (bound >= tol && i < 400) {
    bound /= rho;
    ++i;
  }
  return i;
}

struct HJet {
  double h, hp, hpp;
};

// H, H', H'' at one point sharing a single ladder of evaluations
// H(x rho^{-k}).  The derivative is the truncated product
// prod_{j<=J} f'(H(x rho^{-j}))/rho and the second derivative the matching
// series; writing each series term as
//   prefix(i-1) * suffix(i+1)^2 * f''(H(x rho^{-i})) * rho^{-(i+1)}
// cancels the f'(H(x rho^{-i})) factor structurally, so the 0/0 convention
// for f''/f' never needs a division.
HJet h_jet(const OffspringModel& m, double x, double tol) {
  if (m.linear_reproduction()) return {x, 1.0, 0.0};
  double rho = m.rho();
  int depth = std::max(product_depth(m, x, tol), series_depth(m, tol));
  std::vector<double> ladder(depth + 1);
  ladder[0] = h_eval(m, x, tol);
  for (int k = 1; k <= depth; ++k)
    ladder[k] = h_eval(m, x / pow_int(rho, k), tol);

  std::vector<double> factor(depth + 1, 1.0);
  for (int j = 1; j <= depth; ++j) factor[j] = m.f_prime(ladder[j]) / rho;

  // prefix[i] = factor_1 ... factor_i, suffix[i] = factor_i ... factor_depth
  std::vector<double> prefix(depth + 2, 1.0), suffix(depth + 2, 1.0);
  for (int i = 1; i <= depth; ++i) prefix[i] = prefix[i - 1] * factor[i];
  for (int i = depth; i >= 1; --i) suffix[i] = suffix[i + 1] * factor[i];

  int prod_j = product_depth(m, x, tol);
  double hp = 1.0;
  for (int j = 1; j <= prod_j; ++j) hp *= factor[j];

  double hpp = 0.0;
  int ser_i = series_depth(m, tol);
  for (int i = 1; i <= std::min(ser_i, depth); ++i) {
    double s = suffix[i + 1];
    hpp += prefix[i - 1] * s * s * m.f_second(ladder[i]) / pow_int(rho, i + 1);
  }
  return {ladder[0], hp, hpp};
}

}  // namespace

std::vector<double> iterate_map(const OffspringModel& model, double x0,
                                int n) {
  if (!(x0 >= 0.0)) throw std::domain_error("iterate_map: x0 must be >= 0");
  if (n < 0) throw std::domain_error("iterate_map: n must be >= 0");
  std::vector<double> path(static_cast<std::size_t>(n) + 1);
  path[0] = x0;
  for (int i = 1; i <= n; ++i)
    path[static_cast<std::size_t>(i)] =
        model.reproduction_map(path[static_cast<std::size_t>(i) - 1]);
  return path;
}

std::vector<double> h_iterates(const OffspringModel& model, double x,
                               double tol, int cap) {
  if (!(x >= 0.0)) throw std::domain_error("h_iterates: x must be >= 0");
  if (!(tol > 0.0)) throw std::domain_error("h_iterates: tol must be > 0");
  double rho = model.rho();
  double thresh = tol * (1.0 - 1.0 / rho);
  // The Cauchy test is only trustworthy once the base of the iteration
  // tower sits inside the contraction zone; before that, increments can be
  // coincidentally tiny (f has a fixed point at the capacity).  Burn in
  // until x/rho^n <= 1/2 and then ask for two small increments in a row.
  int n_min = 1;
  for (double w = x; w > 0.5 && n_min < cap; w /= rho) ++n_min;
  bool prev_small = false;
  std::vector<double> values;
  values.push_back(approximant(model, x, 1));
  for (int n = 2; n <= cap; ++n) {
    double cur = approximant(model, x, n);
    double inc = std::abs(cur - values.back());
    values.push_back(cur);
    bool small = inc <= thresh;
    if (small && prev_small && n >= n_min) return values;
    prev_small = small;
  }
  std::ostringstream msg;
  msg << "conjugacy iteration did not reach tol " << tol << " at x = " << x
      << " within " << cap << " steps; last increment "
      << std::abs(values.back() - values[values.size() - 2]);
  throw convergence_error(msg.str(), cap,
                          std::abs(values.back() - values[values.size() - 2]));
}

double h_eval(const OffspringModel& model, double x, double tol) {
  if (!(x >= 0.0)) throw std::domain_error("h_eval: x must be >= 0");
  if (!(tol > 0.0)) throw std::domain_error("h_eval: tol must be > 0");
  // A linear map is its own conjugacy: f^n(x/rho^n) = x for every n.
  if (model.linear_reproduction() || x == 0.0) return x;
  return h_iterates(model, x, tol).back();
}

double h_prime(const OffspringModel& model, double x, double tol) {
  if (!(x >= 0.0)) throw std::domain_error("h_prime: x must be >= 0");
  return h_jet(model, x, tol).hp;
}

double h_second(const OffspringModel& model, double x, double tol) {
  if (!(x >= 0.0)) throw std::domain_error("h_second: x must be >= 0");
  return h_jet(model, x, tol).hpp;
}

double semiconjugacy_residual(const OffspringModel& model, double x,
                              double tol) {
  double lhs = h_eval(model, x, tol);
  double rhs = model.reproduction_map(h_eval(model, x / model.rho(), tol));
  return std::abs(lhs - rhs);
}

ConjugacyEvaluator ConjugacyEvaluator::build(const OffspringModel& model,
                                             double x_max, double step,
                                             double tol) {
  if (!(x_max > 0.0) || !(step > 0.0) || step > x_max)
    throw std::domain_error("conjugacy table: need 0 < step <= x_max");
  if (!(tol > 0.0)) throw std::domain_error("conjugacy table: tol must be > 0");

  ConjugacyEvaluator ev(model);
  ev.step_ = step;
  ev.tol_ = tol;
  std::size_t n = static_cast<std::size_t>(std::llround(x_max / step));
  if (n < 2) throw std::domain_error("conjugacy table: fewer than 3 nodes");

  ev.grid_.resize(n + 1);
  ev.h_.resize(n + 1);
  ev.hp_.resize(n + 1);
  ev.hpp_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    double x = step * static_cast<double>(i);
    ev.grid_[i] = x;
    HJet jet = h_jet(model, x, tol);
    ev.h_[i] = jet.h;
    ev.hp_[i] = jet.hp;
    ev.hpp_[i] = jet.hpp;
  }

  auto certify = [&](bool ok, const std::string& what) {
    if (!ok)
      throw std::runtime_error("conjugacy table certification failed: " +
                               what);
  };

  certify(ev.h_[0] == 0.0, "H(0) != 0");
  certify(ev.hp_[0] == 1.0, "H'(0) != 1");
  for (std::size_t i = 0; i < n; ++i)
    certify(std::abs(ev.h_[i + 1] - ev.h_[i]) <= step + 2.0 * tol,
            "H increment exceeds the Lipschitz bound");

  // The defining equation must hold to a small multiple of tol at every
  // node; each side carries at most ~tol of iteration error and the right
  // side is amplified by at most rho.
  for (std::size_t i = 0; i <= n; ++i) {
    double res = semiconjugacy_residual(model, ev.grid_[i], tol);
    certify(res <= 10.0 * tol, "semiconjugacy residual above 10*tol");
  }

  // Geometric decay of the defining iterates at three probes: late
  // increment ratios should approach 1/rho.
  if (!model.linear_reproduction()) {
    for (double frac : {0.25, 0.5, 0.75}) {
      double x = x_max * frac;
      auto vals = h_iterates(model, x, tol);
      std::vector<double> ratios;
      for (std::size_t k = 0; k + 2 < vals.size(); ++k) {
        double d0 = std::abs(vals[k + 1] - vals[k]);
        double d1 = std::abs(vals[k + 2] - vals[k + 1]);
        if (d0 >= 1e-9 && d1 >= 1e-9) ratios.push_back(d1 / d0);
      }
      if (ratios.size() < 2) continue;  // converged too fast to measure
      std::size_t use = std::min<std::size_t>(5, ratios.size());
      double mean = 0;
      for (std::size_t k = ratios.size() - use; k < ratios.size(); ++k)
        mean += ratios[k];
      mean /= static_cast<double>(use);
      certify(std::abs(mean - 1.0 / model.rho()) <= 0.05,
              "iterate increments do not decay at rate 1/rho");
    }
  }

  // Largest prefix on which H grows by at least step/4 per node: certified
  // strictly increasing, hence invertible.
  std::size_t upper = 0;
  while (upper < n && ev.h_[upper + 1] - ev.h_[upper] >= step / 4.0) ++upper;
  ev.invertible_upper_ = ev.grid_[upper];

  // Hermite slopes from the tabulated derivative, limited where needed so
  // interpolation preserves the monotonicity of the data between nodes.
  ev.slope_ = ev.hp_;
  for (std::size_t i = 0; i <= n; ++i) {
    double dl = i > 0 ? (ev.h_[i] - ev.h_[i - 1]) / step : 0.0;
    double dr = i < n ? (ev.h_[i + 1] - ev.h_[i]) / step : 0.0;
    double lim = 3.0 * std::min(i > 0 ? std::abs(dl) : 1e300,
                                i < n ? std::abs(dr) : 1e300);
    if ((i > 0 && i < n && dl * dr <= 0.0))
      ev.slope_[i] = 0.0;
    else
      ev.slope_[i] = std::clamp(ev.slope_[i], -lim, lim);
  }
  return ev;
}

std::size_t ConjugacyEvaluator::locate(double x) const {
  std::size_t i = static_cast<std::size_t>(x / step_);
  if (i >= grid_.size() - 1) i = grid_.size() - 2;
  return i;
}

double ConjugacyEvaluator::h_at(double x) const {
  if (!(x >= 0.0)) throw std::domain_error("h_at: x must be >= 0");
  if (model_.linear_reproduction()) return x;
  if (x > grid_.back()) return h_eval(model_, x, tol_);
  std::size_t i = locate(x);
  double t = (x - grid_[i]) / step_;
  double t2 = t * t, t3 = t2 * t;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * h_[i] +
         (t3 - 2.0 * t2 + t) * step_ * slope_[i] +
         (-2.0 * t3 + 3.0 * t2) * h_[i + 1] +
         (t3 - t2) * step_ * slope_[i + 1];
}

double ConjugacyEvaluator::h_prime_at(double x) const {
  if (!(x >= 0.0)) throw std::domain_error("h_prime_at: x must be >= 0");
  if (model_.linear_reproduction()) return 1.0;
  if (x > grid_.back()) return h_prime(model_, x, tol_);
  std::size_t i = locate(x);
  double t = (x - grid_[i]) / step_;
  double t2 = t * t, t3 = t2 * t;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * hp_[i] +
         (t3 - 2.0 * t2 + t) * step_ * hpp_[i] +
         (-2.0 * t3 + 3.0 * t2) * hp_[i + 1] +
         (t3 - t2) * step_ * hpp_[i + 1];
}

double ConjugacyEvaluator::h_second_at(double x) const {
  if (!(x >= 0.0)) throw std::domain_error("h_second_at: x must be >= 0");
  if (model_.linear_reproduction()) return 0.0;
  if (x > grid_.back()) return h_second(model_, x, tol_);
  std::size_t i = locate(x);
  double t = (x - grid_[i]) / step_;
  return (1.0 - t) * hpp_[i] + t * hpp_[i + 1];
}

double ConjugacyEvaluator::h_inverse(double y) const {
  double y_top = h_at(invertible_upper_);
  if (!(y >= -1e-12) || y > y_top + 1e-12)
    throw std::domain_error("h_inverse: value outside the invertible range");
  double lo = 0.0, hi = invertible_upper_;
  if (y <= 0.0) return 0.0;
  if (y >= y_top) return invertible_upper_;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    if (h_at(mid) < y)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace capsim
