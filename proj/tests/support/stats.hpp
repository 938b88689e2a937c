#pragma once

// Helpers the test oracles share: regularized incomplete gamma and a
// chi-square goodness-of-fit wrapper with small-cell pooling.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace teststat {

// Regularized upper incomplete gamma Q(a, x): series for small x,
// Lentz continued fraction otherwise.
inline double gamma_q(double a, double x) {
  if (x < 0 || a <= 0) throw std::domain_error("gamma_q domain");
  if (x == 0) return 1.0;
  double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // lower series, return 1 - P
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    double p = sum * std::exp(-x + a * std::log(x) - gln);
    return 1.0 - p;
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chisq_pvalue(double stat, int df) {
  if (df <= 0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * stat);
}

struct ChiSqResult {
  double stat = 0;
  int df = 0;
  double p = 1;
};

// Pearson chi-square of observed counts against cell probabilities.
// Consecutive cells are pooled until each expected count reaches 5; the
// leftover tail is pooled into the final bin.
inline ChiSqResult chi_square_gof(const std::vector<std::int64_t>& observed,
                                  const std::vector<double>& probs,
                                  std::int64_t n_draws) {
  if (observed.size() != probs.size())
    throw std::invalid_argument("chi_square_gof: size mismatch");
  std::vector<double> exp_bins;
  std::vector<double> obs_bins;
  double e_acc = 0, o_acc = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    e_acc += probs[i] * static_cast<double>(n_draws);
    o_acc += static_cast<double>(observed[i]);
    if (e_acc >= 5.0) {
      exp_bins.push_back(e_acc);
      obs_bins.push_back(o_acc);
      e_acc = 0;
      o_acc = 0;
    }
  }
  if (e_acc > 0 || o_acc > 0) {
    if (exp_bins.empty()) {
      exp_bins.push_back(e_acc);
      obs_bins.push_back(o_acc);
    } else {
      exp_bins.back() += e_acc;
      obs_bins.back() += o_acc;
    }
  }
  ChiSqResult r;
  r.df = static_cast<int>(exp_bins.size()) - 1;
  for (std::size_t i = 0; i < exp_bins.size(); ++i) {
    double d = obs_bins[i] - exp_bins[i];
    if (exp_bins[i] > 0) r.stat += d * d / exp_bins[i];
  }
  r.p = r.df > 0 ? chisq_pvalue(r.stat, r.df) : 1.0;
  return r;
}

}  // namespace teststat
