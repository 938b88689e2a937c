#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "capsim/offspring.hpp"
#include "capsim/rng.hpp"
#include "support/stats.hpp"

using capsim::Family;
using capsim::OffspringModel;
using capsim::OffspringSampler;
using capsim::Philox;

namespace {

std::vector<OffspringModel> all_models() {
  return {OffspringModel::geometric(2.0), OffspringModel::ricker(2.0),
          OffspringModel::binary_splitting(2.0),
          OffspringModel::density_independent(2.5),
          OffspringModel::geometric(1.5), OffspringModel::ricker(3.0)};
}

}  // namespace

TEST_CASE("geometric closed forms at rho = 2") {
  auto m = OffspringModel::geometric(2.0);
  // q(0) = 2/3, q(1) = 1/2 by construction
  CHECK(m.pmf(0.0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(m.pmf(0.0, 2) == doctest::Approx(4.0 / 27.0).epsilon(1e-14));
  CHECK(m.pmf(1.0, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(m.cdf(0.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(m.cdf(0.0, 1.0) == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
  CHECK(m.cdf(0.0, 1.5) == m.cdf(0.0, 1.0));  // floor applied
  // F(0) = 1/3 < 0.5 <= F(1), so the generalized inverse at 0.5 is 1
  CHECK(m.quantile(0.0, 0.5) == 1);
  CHECK(m.quantile(0.0, 0.0) == 0);
  CHECK(m.mean(0.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.mean(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.variance(0.0) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(m.second_moment(0.0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("ricker closed forms at rho = 2") {
  auto m = OffspringModel::ricker(2.0);
  CHECK(m.pmf(0.0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(m.pmf(0.0, 1) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(m.pmf(1.0, 0) ==
        doctest::Approx(0.5 * std::exp(-2.0) + 0.5).epsilon(1e-14));
  CHECK(m.pmf(1e6, 0) == 1.0);  // total sterility at extreme density
  CHECK(m.mean(0.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.mean(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.mean(0.5) == doctest::Approx(std::pow(2.0, 0.5)).epsilon(1e-12));
  CHECK(m.variance(0.0) == doctest::Approx(2.0).epsilon(1e-12));  // Poisson
}

TEST_CASE("binary splitting closed forms") {
  auto m = OffspringModel::binary_splitting(2.0);
  CHECK(m.pmf(0.0, 2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.pmf(0.0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(m.pmf(0.0, 1) == 0.0);
  CHECK(m.variance(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.mean(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.quantile(0.0, 0.5) == 2);
  auto m15 = OffspringModel::binary_splitting(1.5);
  CHECK(m15.pmf(0.0, 2) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(m15.pmf(0.0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(OffspringModel::binary_splitting(2.5), std::domain_error);
}

TEST_CASE("density independent law is constant in density") {
  auto m = OffspringModel::density_independent(2.5);
  CHECK(m.pmf(0.0, 2) == doctest::Approx(0.5));
  CHECK(m.pmf(0.0, 3) == doctest::Approx(0.5));
  CHECK(m.pmf(3.7, 2) == m.pmf(0.0, 2));
  CHECK(m.mean(0.0) == 2.5);
  CHECK(m.mean(2.0) == 2.5);
  CHECK(m.variance(1.0) == doctest::Approx(0.25));
  CHECK(m.quantile(0.0, 0.3) == 2);
  CHECK(m.quantile(0.0, 0.7) == 3);
  CHECK(m.quantile(1.9, 0.3) == m.quantile(0.0, 0.3));
  auto d2 = OffspringModel::density_independent(2.0);
  CHECK(d2.pmf(0.5, 2) == 1.0);
  CHECK(d2.quantile(0.5, 0.999) == 2);
  CHECK(d2.linear_reproduction());
}

TEST_CASE("pmf sums to one") {
  for (const auto& m : all_models()) {
    for (double x : {0.0, 0.37, 1.0, 2.5}) {
      double sum = 0;
      for (std::int64_t ell = 0; ell <= 200; ++ell) sum += m.pmf(x, ell);
      CHECK(std::abs(sum - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("moment identity mean^2 + variance = second moment") {
  for (const auto& m : all_models()) {
    for (double x : {0.0, 0.2, 1.0, 3.0}) {
      double lhs = m.mean(x) * m.mean(x) + m.variance(x);
      CHECK(lhs == doctest::Approx(m.second_moment(x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("moments agree with the pmf") {
  for (const auto& m : all_models()) {
    for (double x : {0.0, 0.8}) {
      double mean = 0, m2 = 0;
      for (std::int64_t ell = 0; ell <= 400; ++ell) {
        double p = m.pmf(x, ell);
        mean += p * static_cast<double>(ell);
        m2 += p * static_cast<double>(ell) * static_cast<double>(ell);
      }
      CHECK(mean == doctest::Approx(m.mean(x)).epsilon(1e-9));
      CHECK(m2 == doctest::Approx(m.second_moment(x)).epsilon(1e-9));
    }
  }
}

TEST_CASE("quantile and cdf form a Galois connection") {
  Philox g(7777, 0);
  for (const auto& m : all_models()) {
    for (double x : {0.0, 0.31, 1.0, 2.2}) {
      for (int i = 0; i < 5000; ++i) {
        double u = g.uniform();
        std::int64_t t = m.quantile(x, u);
        CHECK(m.cdf(x, static_cast<double>(t)) >= u);
        if (t > 0) CHECK(m.cdf(x, static_cast<double>(t - 1)) < u);
      }
    }
  }
}

TEST_CASE("quantile is monotone nonincreasing in density") {
  Philox g(31337, 0);
  for (const auto& m : all_models()) {
    for (int i = 0; i < 20000; ++i) {
      double u = g.uniform();
      double x1 = 4.0 * g.uniform();
      double x2 = x1 + 3.0 * g.uniform();
      CHECK(m.quantile(x2, u) <= m.quantile(x1, u));
    }
  }
}

TEST_CASE("sampler matches the public quantile") {
  Philox g(555, 3);
  for (const auto& m : all_models()) {
    for (double x : {0.0, 0.9, 1.7}) {
      OffspringSampler s(m, x);
      for (int i = 0; i < 2000; ++i) {
        double u = g.uniform();
        CHECK(s(u) == m.quantile(x, u));
      }
    }
  }
}

TEST_CASE("sampled offspring distribution matches the pmf") {
  const int n = 100000;
  int model_idx = 0;
  for (const auto& m : all_models()) {
    for (double x : {0.0, 0.5, 1.0}) {
      Philox g(811, static_cast<std::uint64_t>(64 * model_idx) +
                        static_cast<std::uint64_t>(x * 7));
      OffspringSampler s(m, x);
      std::vector<std::int64_t> counts(64, 0);
      for (int i = 0; i < n; ++i) {
        std::int64_t t = s(g.uniform());
        if (t < 64) ++counts[static_cast<std::size_t>(t)];
      }
      std::vector<double> probs(64, 0.0);
      for (std::int64_t ell = 0; ell < 64; ++ell)
        probs[static_cast<std::size_t>(ell)] = m.pmf(x, ell);
      auto r = teststat::chi_square_gof(counts, probs, n);
      CHECK(r.p > 0.001);
    }
    ++model_idx;
  }
}

TEST_CASE("domain errors") {
  auto m = OffspringModel::geometric(2.0);
  CHECK_THROWS_AS(m.pmf(-0.1, 0), std::domain_error);
  CHECK_THROWS_AS(m.pmf(0.0, -1), std::domain_error);
  CHECK_THROWS_AS(m.quantile(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(m.quantile(0.0, -0.01), std::domain_error);
  CHECK_THROWS_AS(m.quantile(-1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(OffspringModel::geometric(1.0), std::domain_error);
  CHECK_THROWS_AS(OffspringModel::ricker(0.5), std::domain_error);
  CHECK(m.cdf(0.0, -0.5) == 0.0);
}

TEST_CASE("reproduction map derivatives against finite differences") {
  const double h = 1e-5;
  for (const auto& m : all_models()) {
    for (double x : {0.1, 0.7, 1.9}) {
      double fp = (m.reproduction_map(x + h) - m.reproduction_map(x - h)) /
                  (2.0 * h);
      double fpp = (m.reproduction_map(x + h) - 2.0 * m.reproduction_map(x) +
                    m.reproduction_map(x - h)) /
                   (h * h);
      CHECK(m.f_prime(x) == doctest::Approx(fp).epsilon(1e-7));
      CHECK(m.f_second(x) == doctest::Approx(fpp).epsilon(2e-4));
    }
  }
}

TEST_CASE("f second derivative sup") {
  auto ricker = OffspringModel::ricker(2.0);
  CHECK(ricker.f_second_sup() ==
        doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
  auto geo = OffspringModel::geometric(2.0);
  // must dominate the pointwise value everywhere we can probe
  for (double x = 0.0; x <= 10.0; x += 0.01)
    CHECK(geo.f_second_sup() >= std::abs(geo.f_second(x)) - 1e-9);
}

TEST_CASE("assumption validation") {
  auto geo = validate_assumptions(OffspringModel::geometric(2.0));
  CHECK(geo.a1_ok);
  CHECK(geo.a1_worst_violation <= 0.0);
  CHECK(geo.a3_ok);
  CHECK(geo.a3_f_prime_zero == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(geo.a3_sup_f_prime <= geo.a3_f_prime_zero + 1e-6);

  auto ric = validate_assumptions(OffspringModel::ricker(2.0));
  CHECK(ric.a1_ok);
  CHECK(ric.a3_ok);
  // |d m2/dx| maximal at 0: log(2) * 6 = 4.1589
  CHECK(ric.a2_lipschitz_estimate > 3.9);
  CHECK(ric.a2_lipschitz_estimate < 6.0 * std::log(2.0) + 1e-6);

  auto di = validate_assumptions(OffspringModel::density_independent(2.0));
  CHECK(di.a2_lipschitz_estimate == 0.0);
  CHECK(di.a1_ok);
  CHECK(di.a1_worst_violation == 0.0);

  auto text = format_report(geo);
  CHECK(text.find("a1 stochastic order: ok") != std::string::npos);
}

TEST_CASE("aggregate generation sums match per-individual sampling") {
  // distributional identity check: compare the O(1) aggregate draw against
  // the z-fold convolution of the pmf
  struct Case {
    OffspringModel m;
    double x;
  };
  const Case cases[] = {{OffspringModel::geometric(2.0), 0.4},
                        {OffspringModel::ricker(2.0), 0.6},
                        {OffspringModel::binary_splitting(1.7), 0.2},
                        {OffspringModel::density_independent(2.5), 1.3}};
  const std::int64_t z = 3;
  const int n = 30000;
  int case_idx = 0;
  for (const auto& c : cases) {
    // z-fold convolution oracle
    std::vector<double> dist{1.0};
    std::vector<double> step(80, 0.0);
    for (std::int64_t ell = 0; ell < 80; ++ell)
      step[static_cast<std::size_t>(ell)] = c.m.pmf(c.x, ell);
    for (int rep = 0; rep < z; ++rep) {
      std::vector<double> next(dist.size() + step.size() - 1, 0.0);
      for (std::size_t i = 0; i < dist.size(); ++i)
        for (std::size_t j = 0; j < step.size(); ++j)
          next[i + j] += dist[i] * step[j];
      dist = std::move(next);
    }
    std::size_t top = std::min<std::size_t>(dist.size(), 200);
    std::vector<std::int64_t> counts(top, 0);
    Philox g(90210, static_cast<std::uint64_t>(case_idx++));
    for (int i = 0; i < n; ++i) {
      std::int64_t v = c.m.sample_generation_sum(z, c.x, g);
      if (v >= 0 && static_cast<std::size_t>(v) < top)
        ++counts[static_cast<std::size_t>(v)];
    }
    dist.resize(top, 0.0);
    auto r = teststat::chi_square_gof(counts, dist, n);
    CHECK(r.p > 0.001);
  }
}
