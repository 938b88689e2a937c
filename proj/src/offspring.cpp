#include "capsim/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace capsim {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::domain_error(msg);
}

void check_density(double x) {
  require(x >= 0.0, "density x must be >= 0");
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::geometric: return "geometric";
    case Family::ricker: return "ricker";
    case Family::binary_splitting: return "binary_splitting";
    case Family::density_independent: return "density_independent";
  }
  return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (Family f : {Family::geometric, Family::ricker, Family::binary_splitting,
                   Family::density_independent}) {
    if (name == family_name(f)) return f;
  }
  return std::nullopt;
}

OffspringModel OffspringModel::geometric(double rho) {
  require(rho > 1.0, "geometric: rho must be > 1");
  OffspringModel m(Family::geometric, rho);
  m.q0_ = rho / (1.0 + rho);
  // chosen so the success parameter halves the mean to 1 at density 1
  m.beta_ = std::log(2.0 * rho / (1.0 + rho));
  m.compute_f_second_sup();
  return m;
}

OffspringModel OffspringModel::ricker(double rho) {
  require(rho > 1.0, "ricker: rho must be > 1");
  OffspringModel m(Family::ricker, rho);
  m.gamma_ = std::log(rho);
  // Poisson(rho) base law, truncated far out in the tail; the residual is
  // folded into the last atom so the table is an exact distribution.
  auto pmf = std::make_shared<std::vector<double>>();
  double q = std::exp(-rho);
  double sum = 0;
  std::int64_t ell = 0;
  for (;;) {
    pmf->push_back(q);
    sum += q;
    ++ell;
    if ((q < 1e-19 && static_cast<double>(ell) > 2.0 * rho + 20.0) ||
        ell >= 10000)
      break;
    q *= rho / static_cast<double>(ell);
  }
  double residual = 1.0 - sum;
  if (residual > 0) pmf->back() += residual;
  auto tail = std::make_shared<std::vector<double>>(pmf->size(), 0.0);
  for (std::size_t k = pmf->size() - 1; k-- > 0;)
    (*tail)[k] = (*tail)[k + 1] + (*pmf)[k + 1];
  m.base_pmf_ = std::move(pmf);
  m.base_tail_ = std::move(tail);
  m.compute_f_second_sup();
  return m;
}

OffspringModel OffspringModel::binary_splitting(double rho) {
  require(rho > 1.0 && rho <= 2.0, "binary_splitting: rho must be in (1, 2]");
  OffspringModel m(Family::binary_splitting, rho);
  m.gamma_ = std::log(rho);
  m.compute_f_second_sup();
  return m;
}

OffspringModel OffspringModel::density_independent(double rho) {
  require(rho > 1.0, "density_independent: rho must be > 1");
  OffspringModel m(Family::density_independent, rho);
  m.lo_count_ = static_cast<std::int64_t>(std::floor(rho));
  m.theta_ = rho - std::floor(rho);
  m.f2sup_ = 0.0;
  return m;
}

double OffspringModel::ricker_tail(std::int64_t t) const {
  if (t < 0) return 1.0;
  const auto& tail = *base_tail_;
  if (static_cast<std::size_t>(t) >= tail.size()) return 0.0;
  return tail[static_cast<std::size_t>(t)];
}

double OffspringModel::pmf(double x, std::int64_t ell) const {
  check_density(x);
  require(ell >= 0, "offspring count must be >= 0");
  switch (family_) {
    case Family::geometric: {
      double q = q0_ * std::exp(-beta_ * x);
      return std::pow(q, static_cast<double>(ell)) * (1.0 - q);
    }
    case Family::ricker: {
      double a = std::exp(-gamma_ * x);
      const auto& base = *base_pmf_;
      double ql = static_cast<std::size_t>(ell) < base.size()
                      ? base[static_cast<std::size_t>(ell)]
                      : 0.0;
      if (ell == 0) return ql * a + (1.0 - a);
      return ql * a;
    }
    case Family::binary_splitting: {
      double p2 = 0.5 * std::exp(gamma_ * (1.0 - x));
      if (ell == 0) return 1.0 - p2;
      if (ell == 2) return p2;
      return 0.0;
    }
    case Family::density_independent: {
      if (ell == lo_count_) return 1.0 - theta_;
      if (ell == lo_count_ + 1 && theta_ > 0) return theta_;
      return 0.0;
    }
  }
  return 0.0;
}

double OffspringModel::cdf(double x, double t) const {
  check_density(x);
  if (!(t >= 0.0)) return 0.0;
  double tf = std::floor(t);
  switch (family_) {
    case Family::geometric: {
      double q = q0_ * std::exp(-beta_ * x);
      return 1.0 - std::pow(q, tf + 1.0);
    }
    case Family::ricker: {
      double a = std::exp(-gamma_ * x);
      std::int64_t ti = tf >= 9.0e18 ? std::int64_t{1} << 62
                                     : static_cast<std::int64_t>(tf);
      return 1.0 - a * ricker_tail(ti);
    }
    case Family::binary_splitting: {
      if (tf >= 2.0) return 1.0;
      double p2 = 0.5 * std::exp(gamma_ * (1.0 - x));
      return 1.0 - p2;
    }
    case Family::density_independent: {
      if (tf < static_cast<double>(lo_count_)) return 0.0;
      if (tf < static_cast<double>(lo_count_ + 1)) return 1.0 - theta_;
      return 1.0;
    }
  }
  return 0.0;
}

std::int64_t OffspringModel::quantile(double x, double u) const {
  return OffspringSampler(*this, x)(u);
}

double OffspringModel::mean(double x) const {
  check_density(x);
  switch (family_) {
    case Family::geometric: {
      double q = q0_ * std::exp(-beta_ * x);
      return q / (1.0 - q);
    }
    case Family::ricker:
    case Family::binary_splitting:
      return std::exp(gamma_ * (1.0 - x));
    case Family::density_independent:
      return rho_;
  }
  return 0.0;
}

double OffspringModel::second_moment(double x) const {
  check_density(x);
  switch (family_) {
    case Family::geometric: {
      double q = q0_ * std::exp(-beta_ * x);
      double om = 1.0 - q;
      return q * (1.0 + q) / (om * om);
    }
    case Family::ricker:
      // thinned Poisson: E xi^2 = e^{-gamma x} (rho + rho^2)
      return std::exp(-gamma_ * x) * (rho_ + rho_ * rho_);
    case Family::binary_splitting:
      return 2.0 * std::exp(gamma_ * (1.0 - x));
    case Family::density_independent:
      return theta_ * (1.0 - theta_) + rho_ * rho_;
  }
  return 0.0;
}

double OffspringModel::variance(double x) const {
  double m = mean(x);
  return second_moment(x) - m * m;
}

double OffspringModel::reproduction_map(double x) const {
  check_density(x);
  return x * mean(x);
}

double OffspringModel::f_prime(double x) const {
  switch (family_) {
    case Family::geometric: {
      double q = q0_ * std::exp(-beta_ * x);
      double om = 1.0 - q;
      double m = q / om;
      double mp = -beta_ * q / (om * om);
      return m + x * mp;
    }
    case Family::ricker:
    case Family::binary_splitting: {
      double m = std::exp(gamma_ * (1.0 - x));
      return m * (1.0 - gamma_ * x);
    }
    case Family::density_independent:
      return rho_;
  }
  return 0.0;
}

double OffspringModel::f_second(double x) const {
  switch (family_) {
    case Family::geometric: {
      double q = q0_ * std::exp(-beta_ * x);
      double om = 1.0 - q;
      double mp = -beta_ * q / (om * om);
      double mpp = beta_ * beta_ * q / (om * om) +
                   2.0 * beta_ * beta_ * q * q / (om * om * om);
      return 2.0 * mp + x * mpp;
    }
    case Family::ricker:
    case Family::binary_splitting: {
      double m = std::exp(gamma_ * (1.0 - x));
      return gamma_ * m * (gamma_ * x - 2.0);
    }
    case Family::density_independent:
      return 0.0;
  }
  return 0.0;
}

void OffspringModel::compute_f_second_sup() {
  if (family_ == Family::ricker || family_ == Family::binary_splitting) {
    // |f''| = gamma e^{gamma(1-x)} |gamma x - 2| peaks at x = 0
    f2sup_ = 2.0 * rho_ * gamma_;
    return;
  }
  // geometric: |f''| decays like e^{-beta x}; scan one decay range finely
  double hi = 60.0 / beta_;
  const int n = 20000;
  double sup = 0;
  for (int i = 0; i <= n; ++i) {
    double x = hi * static_cast<double>(i) / n;
    sup = std::max(sup, std::abs(f_second(x)));
  }
  f2sup_ = sup;
}

std::int64_t OffspringModel::sample_generation_sum(std::int64_t z, double x,
                                                   Philox& rng) const {
  check_density(x);
  require(z >= 0, "population must be >= 0");
  if (z == 0) return 0;
  switch (family_) {
    case Family::geometric: {
      // sum of z geometrics is negative binomial; draw it as a
      // gamma-mixed Poisson
      double q = q0_ * std::exp(-beta_ * x);
      if (q <= 0.0) return 0;
      double lambda = std::gamma_distribution<double>(
          static_cast<double>(z), q / (1.0 - q))(rng);
      return std::poisson_distribution<std::int64_t>(lambda)(rng);
    }
    case Family::ricker: {
      double a = std::exp(-gamma_ * x);
      std::int64_t m =
          std::binomial_distribution<std::int64_t>(z, a)(rng);
      if (m == 0) return 0;
      return std::poisson_distribution<std::int64_t>(
          rho_ * static_cast<double>(m))(rng);
    }
    case Family::binary_splitting: {
      double p2 = 0.5 * std::exp(gamma_ * (1.0 - x));
      return 2 * std::binomial_distribution<std::int64_t>(z, p2)(rng);
    }
    case Family::density_independent: {
      std::int64_t extra =
          theta_ > 0
              ? std::binomial_distribution<std::int64_t>(z, theta_)(rng)
              : 0;
      return lo_count_ * z + extra;
    }
  }
  return 0;
}

OffspringSampler::OffspringSampler(const OffspringModel& model, double x)
    : model_(&model), family_(model.family()) {
  check_density(x);
  switch (family_) {
    case Family::geometric: {
      double rho = model.rho();
      double q0 = rho / (1.0 + rho);
      double beta = std::log(2.0 * rho / (1.0 + rho));
      q_ = q0 * std::exp(-beta * x);
      logq_ = std::log(q_);
      break;
    }
    case Family::ricker:
      a_ = std::exp(-std::log(model.rho()) * x);
      break;
    case Family::binary_splitting:
      cdf0_ = 1.0 - 0.5 * std::exp(std::log(model.rho()) * (1.0 - x));
      break;
    case Family::density_independent: {
      double rho = model.rho();
      lo_count_ = static_cast<std::int64_t>(std::floor(rho));
      theta_ = rho - std::floor(rho);
      cdf0_ = 1.0 - theta_;
      break;
    }
  }
}

std::int64_t OffspringSampler::operator()(double u) const {
  require(u >= 0.0 && u < 1.0, "uniform draw must be in [0, 1)");
  switch (family_) {
    case Family::geometric: {
      if (q_ <= 0.0) return 0;  // underflowed success parameter: all mass at 0
      double r = std::log1p(-u) / logq_;
      double t0 = std::floor(r);
      if (r - t0 < 1e-9 || (t0 + 1.0) - r < 1e-9) {
        // boundary case: resolve against the cdf itself
        std::int64_t t =
            t0 > 0.0 ? static_cast<std::int64_t>(t0) - 1 : std::int64_t{0};
        while (1.0 - std::pow(q_, static_cast<double>(t) + 1.0) < u) ++t;
        return t;
      }
      return static_cast<std::int64_t>(t0);
    }
    case Family::ricker: {
      // exponential then binary search for min t with cdf(t) >= u
      auto cdf_at = [&](std::int64_t t) {
        return 1.0 - a_ * model_->ricker_tail(t);
      };
      if (cdf_at(0) >= u) return 0;
      std::int64_t lo = 0;  // invariant: cdf(lo) < u
      std::int64_t width = 1;
      while (cdf_at(lo + width) < u) {
        lo += width;
        width *= 2;
      }
      while (width > 1) {
        std::int64_t half = width / 2;
        if (cdf_at(lo + half) >= u) {
          width = half;
        } else {
          lo += half;
          width -= half;
        }
      }
      return lo + 1;
    }
    case Family::binary_splitting:
      return cdf0_ >= u ? 0 : 2;
    case Family::density_independent:
      if (u == 0.0) return 0;  // cdf(0) = 0 >= 0 under the >= convention
      return cdf0_ >= u ? lo_count_ : lo_count_ + 1;
  }
  return 0;
}

AssumptionReport validate_assumptions(const OffspringModel& model,
                                      double x_max, double step,
                                      std::int64_t t_max, double tol) {
  require(x_max > 0 && step > 0 && step <= x_max, "bad validation grid");
  require(t_max >= 1, "t_max must be >= 1");
  AssumptionReport rep;
  rep.family = model.family();
  rep.rho = model.rho();
  rep.x_max = x_max;
  rep.step = step;
  rep.t_max = t_max;

  int n = static_cast<int>(std::round(x_max / step));
  std::vector<double> grid(n + 1);
  for (int i = 0; i <= n; ++i) grid[i] = step * i;

  // a1: adjacent grid pairs suffice (stochastic order is transitive)
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    for (std::int64_t t = 0; t <= t_max; ++t) {
      double gap = model.cdf(grid[i], static_cast<double>(t)) -
                   model.cdf(grid[i + 1], static_cast<double>(t));
      worst = std::max(worst, gap);
    }
  }
  rep.a1_worst_violation = worst;
  rep.a1_ok = worst <= tol;

  // a2: difference-quotient estimate of the Lipschitz constant of m2
  double lip = 0;
  for (int i = 0; i < n; ++i) {
    double d = std::abs(model.second_moment(grid[i + 1]) -
                        model.second_moment(grid[i])) /
               step;
    lip = std::max(lip, d);
  }
  rep.a2_lipschitz_estimate = lip;

  // a3: finite differences of the reproduction map
  const double h = 1e-5;
  auto fd = [&](double x) {
    if (x < h)
      return (4.0 * model.reproduction_map(x + h) -
              model.reproduction_map(x + 2.0 * h) -
              3.0 * model.reproduction_map(x)) /
             (2.0 * h);
    return (model.reproduction_map(x + h) - model.reproduction_map(x - h)) /
           (2.0 * h);
  };
  double sup_fp = 0;
  for (double x : grid) sup_fp = std::max(sup_fp, std::abs(fd(x)));
  rep.a3_sup_f_prime = sup_fp;
  rep.a3_f_prime_zero = fd(0.0);
  rep.a3_ok = std::abs(rep.a3_f_prime_zero - model.rho()) <= 1e-3 &&
              sup_fp <= rep.a3_f_prime_zero + 1e-6;
  return rep;
}

std::string format_report(const AssumptionReport& rep) {
  std::ostringstream out;
  out.precision(6);
  out << "family:              " << family_name(rep.family) << "\n"
      << "rho:                 " << rep.rho << "\n"
      << "grid:                [0, " << rep.x_max << "] step " << rep.step
      << ", offspring counts 0.." << rep.t_max << "\n"
      << "a1 stochastic order: " << (rep.a1_ok ? "ok" : "VIOLATED")
      << "  (worst violation " << rep.a1_worst_violation << ")\n"
      << "a2 second moment:    Lipschitz estimate " << rep.a2_lipschitz_estimate
      << "\n"
      << "a3 reproduction map: " << (rep.a3_ok ? "ok" : "VIOLATED")
      << "  (sup |f'| " << rep.a3_sup_f_prime << ", f'(0) "
      << rep.a3_f_prime_zero << ")\n";
  return out.str();
}

}  // namespace capsim
