#include "capsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "capsim/errors.hpp"

namespace capsim {

int legacy_cut(double c, int n1, double frac) {
  if (!(c > 0.5) || !(c < 1.0))
    throw std::domain_error("legacy_cut: c must lie in (1/2, 1)");
  double t = c * (static_cast<double>(n1) + frac);
  double snapped = std::round(t);
  // c and log_rho k can multiply to an exact integer; keep the floor from
  // slipping a generation on the last bit
  if (std::abs(t - snapped) < 1e-9) return static_cast<int>(snapped);
  return static_cast<int>(std::floor(t));
}

ErrorSample error_sample(const OffspringModel& model,
                         const ConjugacyEvaluator& h, double k, double c,
                         std::uint64_t seed, int replicate, int w_extra) {
  Horizon hz = horizon(k, model.rho());
  CoupledPath path = simulate_coupled(model, k, hz.n1, seed, w_extra);
  std::size_t n1 = static_cast<std::size_t>(hz.n1);

  ErrorSample s;
  s.k = k;
  s.replicate = replicate;
  s.w_hat = estimate_w(path, model.rho(), hz.n1 + w_extra);
  s.z_extinct = path.z[n1] == 0;
  s.y_extinct = path.y[n1] == 0;

  double zbar = static_cast<double>(path.z[n1]) / k;
  double ybar = static_cast<double>(path.y[n1]) / k;
  s.error_new = zbar - h.h_at(ybar);

  int nc = legacy_cut(c, hz.n1, hz.frac);
  double cut_state = static_cast<double>(path.y[static_cast<std::size_t>(nc)]) / k;
  s.error_legacy = zbar - iterate_map(model, cut_state, hz.n1 - nc).back();
  return s;
}

std::vector<double> sample_quantiles(std::vector<double> values,
                                     const std::vector<double>& levels) {
  std::vector<double> out(levels.size(),
                          std::numeric_limits<double>::quiet_NaN());
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    double p = levels[i];
    if (!(p >= 0.0) || !(p <= 1.0))
      throw std::domain_error("sample_quantiles: level outside [0, 1]");
    double pos = p * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) {
      out[i] = values.back();
    } else {
      double w = pos - static_cast<double>(lo);
      out[i] = values[lo] + w * (values[lo + 1] - values[lo]);
    }
  }
  return out;
}

SlopeFit fit_log_slope(const std::vector<double>& k,
                       const std::vector<double>& q) {
  SlopeFit fit;
  if (k.size() != q.size() || k.size() < 4) return fit;
  std::size_t n = k.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(k[i] > 0.0) || !(q[i] > 0.0)) return fit;
    lx[i] = std::log(k[i]);
    ly[i] = std::log(q[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ly[i] - my - fit.slope * (lx[i] - mx);
    rss += r * r;
  }
  fit.se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  fit.valid = true;
  return fit;
}

RateReport rate_experiment(const OffspringModel& model,
                           const ConjugacyEvaluator& h,
                           const RateConfig& config) {
  if (config.k_grid.empty())
    throw std::domain_error("rate_experiment: empty capacity grid");
  if (config.replicates < 1)
    throw std::domain_error("rate_experiment: need at least one replicate");
  legacy_cut(config.c, 1, 0.0);  // validate c up front

  RateReport report;
  report.config = config;
  std::size_t reps = static_cast<std::size_t>(config.replicates);
  report.samples.resize(config.k_grid.size() * reps);

  // every replicate owns a derived seed, so the sample layout is identical
  // whatever the thread count
  auto run_range = [&](std::size_t ki, std::size_t lo, std::size_t hi) {
    double k = config.k_grid[ki];
    for (std::size_t r = lo; r < hi; ++r) {
      std::uint64_t seed = derive_seed(config.master_seed, ki, r);
      report.samples[ki * reps + r] =
          error_sample(model, h, k, config.c, seed, static_cast<int>(r),
                       config.w_extra);
    }
  };

  int threads = std::max(1, config.threads);
  for (std::size_t ki = 0; ki < config.k_grid.size(); ++ki) {
    if (threads == 1) {
      run_range(ki, 0, reps);
    } else {
      std::vector<std::thread> pool;
      std::size_t chunk = (reps + threads - 1) / threads;
      for (int t = 0; t < threads; ++t) {
        std::size_t lo = std::min(reps, static_cast<std::size_t>(t) * chunk);
        std::size_t hi = std::min(reps, lo + chunk);
        if (lo < hi) pool.emplace_back(run_range, ki, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
  }

  std::vector<double> med_new, med_legacy, k_used;
  for (std::size_t ki = 0; ki < config.k_grid.size(); ++ki) {
    RatePoint pt;
    pt.k = config.k_grid[ki];
    pt.n1 = horizon(pt.k, model.rho()).n1;
    pt.replicates = config.replicates;
    std::vector<double> an_cond, al_cond, an_all, al_all;
    for (std::size_t r = 0; r < reps; ++r) {
      const ErrorSample& s = report.samples[ki * reps + r];
      an_all.push_back(std::abs(s.error_new));
      al_all.push_back(std::abs(s.error_legacy));
      if (!s.y_extinct) {
        an_cond.push_back(std::abs(s.error_new));
        al_cond.push_back(std::abs(s.error_legacy));
      }
    }
    pt.survivors = static_cast<int>(an_cond.size());
    pt.undersampled = pt.survivors < 30;
    pt.q_new_cond = sample_quantiles(an_cond, config.quantile_levels);
    pt.q_legacy_cond = sample_quantiles(al_cond, config.quantile_levels);
    pt.q_new_all = sample_quantiles(an_all, config.quantile_levels);
    pt.q_legacy_all = sample_quantiles(al_all, config.quantile_levels);
    if (!config.quantile_levels.empty() && pt.survivors > 0) {
      k_used.push_back(pt.k);
      med_new.push_back(pt.q_new_cond[0]);
      med_legacy.push_back(pt.q_legacy_cond[0]);
    }
    report.points.push_back(std::move(pt));
  }

  // fitted against the first requested quantile level, conditional series
  report.slope_new = fit_log_slope(k_used, med_new);
  report.slope_legacy = fit_log_slope(k_used, med_legacy);
  return report;
}

double gw_extinction_prob(const OffspringModel& model, double tol) {
  if (!(tol > 0.0)) throw std::domain_error("gw_extinction_prob: tol <= 0");
  // offspring law at density zero, truncated where the tail is negligible
  std::vector<double> p;
  double cum = 0.0;
  for (int t = 0; t < 100000 && cum < 1.0 - 1e-15; ++t) {
    p.push_back(model.pmf(0.0, t));
    cum += p.back();
  }
  double s = 0.0;
  double inc = 1.0;
  for (long iter = 0; iter < 1000000; ++iter) {
    // Horner from the high end
    double next = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) next = next * s + p[i];
    inc = std::abs(next - s);
    if (inc <= tol) return next;
    s = next;
  }
  throw convergence_error("extinction fixed point did not converge", 1000000,
                          inc);
}

ExtinctionComparison compare_extinction(const OffspringModel& model,
                                        int n_steps, int replicates,
                                        std::uint64_t master_seed) {
  if (n_steps < 1 || replicates < 1)
    throw std::domain_error("compare_extinction: bad sizes");
  ExtinctionComparison out;
  out.replicates = replicates;
  out.theoretical = gw_extinction_prob(model);
  double inf = std::numeric_limits<double>::infinity();
  int dead = 0;
  for (int r = 0; r < replicates; ++r) {
    std::uint64_t seed =
        derive_seed(master_seed, 0xE001, static_cast<std::uint64_t>(r));
    auto y = simulate_aggregate(model, inf, n_steps, seed);
    if (y[static_cast<std::size_t>(n_steps)] == 0) ++dead;
  }
  out.empirical = static_cast<double>(dead) / replicates;
  out.se = std::sqrt(out.theoretical * (1.0 - out.theoretical) /
                     static_cast<double>(replicates));
  return out;
}

}  // namespace capsim
