#include <doctest.h>

#include <cmath>
#include <vector>

#include "analysis.hpp"
#include "rng.hpp"
#include "units.hpp"

using namespace qleak;

namespace {

// brute-force oracle: iterate p(m+1) = p(m) + gu (1 - p(m)) - gd p(m)
double iterate_rate_eq(double gu, double gd, double p0, int m) {
  double p = p0;
  for (int k = 0; k < m; ++k) p += gu * (1.0 - p) - gd * p;
  return p;
}

std::vector<double> fit_lengths() {
  return {1, 20, 50, 100, 200, 350, 500, 800, 1200, 2000};
}

}  // namespace

TEST_CASE("rate equation closed forms") {
  const LeakageRates rates{3.92e-4, 3.528e-3, 0.0};

  SUBCASE("m = 0 returns p0") {
    LeakageRates r2 = rates;
    r2.p0 = 0.037;
    CHECK(rate_eq_population(r2, 0, true) == doctest::Approx(0.037));
    CHECK(rate_eq_population(r2, 0, false) == doctest::Approx(0.037));
  }
  SUBCASE("saturation level is gamma_up / Gamma") {
    CHECK(rates.saturation() == doctest::Approx(0.10).epsilon(1e-3));
    CHECK(rate_eq_population(rates, 1e7, false) == doctest::Approx(0.10).epsilon(1e-3));
  }
  SUBCASE("discrete form equals brute-force iteration to 1e-12") {
    for (double gamma : {1e-5, 1e-4, 1e-3, 1e-2}) {
      const LeakageRates r{0.3 * gamma, 0.7 * gamma, 0.01};
      for (int m : {0, 1, 7, 100, 1000, 10000}) {
        const double expected = iterate_rate_eq(r.gamma_up, r.gamma_down, r.p0, m);
        CHECK(std::abs(rate_eq_population(r, m, true) - expected) < 1e-12);
      }
    }
  }
  SUBCASE("discrete and continuous agree within the Gamma^2 m p_inf bound") {
    for (double gamma : {1e-4, 1e-3, 1e-2}) {
      const LeakageRates r{0.25 * gamma, 0.75 * gamma, 0.0};
      for (int m : {1, 10, 100, 1000, 10000}) {
        const double diff =
            std::abs(rate_eq_population(r, m, true) - rate_eq_population(r, m, false));
        CHECK(diff <= gamma * gamma * m * r.saturation() + 1e-15);
      }
    }
  }
}

TEST_CASE("fidelity fit") {
  SUBCASE("noiseless model data recovered exactly") {
    const double a = 0.47, b = 0.51, p = 0.99808;
    std::vector<double> m = fit_lengths(), y;
    for (double mi : m) y.push_back(a * std::pow(p, mi) + b);
    const FidelityFit fit = fit_sequence_fidelity(m, y);
    REQUIRE(fit.fit.converged);
    CHECK(fit.amplitude == doctest::Approx(a).epsilon(1e-9));
    CHECK(fit.offset == doctest::Approx(b).epsilon(1e-9));
    CHECK(fit.decay == doctest::Approx(p).epsilon(1e-9));
    CHECK(fit.r_clifford == doctest::Approx(0.5 * (1 - p)).epsilon(1e-6));
  }
  SUBCASE("noisy Monte Carlo recovery within 10%") {
    const double p_true = 0.99808, r_true = 0.5 * (1 - p_true);
    RngStream rng(99);
    int good = 0;
    const int reps = 60;
    double sum_r = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      std::vector<double> m = fit_lengths(), y;
      for (double mi : m) y.push_back(0.5 * std::pow(p_true, mi) + 0.5 + 0.003 * rng.normal());
      const FidelityFit fit = fit_sequence_fidelity(m, y);
      if (fit.fit.converged && std::abs(fit.r_clifford - r_true) < 0.1 * r_true) ++good;
      sum_r += fit.r_clifford;
    }
    CHECK(good >= reps * 9 / 10);
    CHECK(sum_r / reps == doctest::Approx(r_true).epsilon(0.05));
  }
  SUBCASE("constant data is flagged degenerate") {
    std::vector<double> m = {1, 10, 100, 1000}, y = {0.5, 0.5, 0.5, 0.5};
    const FidelityFit fit = fit_sequence_fidelity(m, y);
    CHECK((fit.fit.degenerate || !fit.fit.converged));
  }
  SUBCASE("too few points rejected") {
    std::vector<double> m = {1, 10, 100}, y = {0.9, 0.8, 0.7};
    CHECK_THROWS_AS(fit_sequence_fidelity(m, y), std::invalid_argument);
  }
}

TEST_CASE("leakage fit") {
  const LeakageRates truth{3.92e-4, 3.528e-3, 0.0};

  SUBCASE("noiseless recovery") {
    std::vector<double> m = fit_lengths(), y;
    for (double mi : m) y.push_back(rate_eq_population(truth, mi, false));
    const LeakageFit fit = fit_leakage(m, y);
    REQUIRE(fit.fit.converged);
    CHECK(fit.rates.gamma_up == doctest::Approx(truth.gamma_up).epsilon(1e-7));
    CHECK(fit.rates.gamma_down == doctest::Approx(truth.gamma_down).epsilon(1e-7));
    CHECK(std::abs(fit.rates.p0 - truth.p0) < 1e-9);
  }
  SUBCASE("alpha = 0.5 rates with 1e-3 noise recovered within 10%") {
    // gamma_down stays T1-dominated while gamma_up drops with DRAG
    const LeakageRates case05{1.02e-4, 3.4e-3, 0.0};
    RngStream rng(7);
    const int reps = 50;
    int good_up = 0;
    for (int rep = 0; rep < reps; ++rep) {
      std::vector<double> m = fit_lengths(), y;
      for (double mi : m) {
        y.push_back(rate_eq_population(case05, mi, false) + 1e-3 * rng.normal());
      }
      const LeakageFit fit = fit_leakage(m, y);
      if (fit.fit.converged &&
          std::abs(fit.rates.gamma_up - case05.gamma_up) < 0.10 * case05.gamma_up) {
        ++good_up;
      }
    }
    CHECK(good_up >= reps * 8 / 10);
  }
  SUBCASE("already-saturated data leaves the split degenerate") {
    LeakageRates sat = truth;
    sat.p0 = sat.saturation();
    std::vector<double> m = fit_lengths(), y;
    for (double mi : m) y.push_back(rate_eq_population(sat, mi, false));
    const LeakageFit fit = fit_leakage(m, y);
    CHECK((fit.fit.degenerate || !fit.fit.converged));
  }
}

TEST_CASE("heating fits") {
  SUBCASE("1->2 rate, T1s fixed at 22/18 us") {
    const double h_true = rate_per_ms_to_per_ns(1.0 / 2.2);
    const double g10 = 1.0 / 22000.0, g21 = 1.0 / 18000.0;
    std::vector<double> t, p2_clean;
    for (double us = 2; us <= 120; us += 6) t.push_back(us_to_ns(us));
    // independent closed form (heating backflow negligible at this order)
    for (double tn : t) {
      const double tbar = 1.0 / (g21 - g10);
      p2_clean.push_back(h_true * tbar * (std::exp(-g10 * tn) - std::exp(-g21 * tn)));
    }
    SUBCASE("clean trace recovered") {
      const RateFit fit = fit_heating_12(t, p2_clean, 22.0, 18.0);
      REQUIRE(fit.converged);
      CHECK(fit.rate_per_ns == doctest::Approx(h_true).epsilon(2e-3));
    }
    SUBCASE("one percent noise keeps recovery within 5%") {
      RngStream rng(5);
      int good = 0;
      const int reps = 40;
      for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> noisy;
        for (double v : p2_clean) noisy.push_back(v * (1.0 + 0.01 * rng.normal()));
        const RateFit fit = fit_heating_12(t, noisy, 22.0, 18.0);
        if (fit.converged && std::abs(fit.rate_per_ns - h_true) < 0.05 * h_true) ++good;
      }
      CHECK(good >= reps * 9 / 10);
    }
  }
  SUBCASE("zero heating returns zero") {
    std::vector<double> t = {1000, 10000, 50000}, p2 = {0.0, 0.0, 0.0};
    const RateFit fit = fit_heating_12(t, p2, 22.0, 18.0);
    CHECK(fit.rate_per_ns == 0.0);
  }
  SUBCASE("0->1 herald variant recovers 1/(4.7 ms) with T1 = 39 us") {
    const double h_true = rate_per_ms_to_per_ns(1.0 / 4.7);
    const double g = 1.0 / 39000.0;
    std::vector<double> t, p1;
    for (double us = 10; us <= 400; us += 20) {
      const double tn = us_to_ns(us);
      t.push_back(tn);
      p1.push_back(h_true / (h_true + g) * (1.0 - std::exp(-(h_true + g) * tn)));
    }
    const RateFit fit = fit_heating_01(t, p1, 39.0);
    REQUIRE(fit.converged);
    CHECK(fit.rate_per_ns == doctest::Approx(h_true).epsilon(2e-3));
    // equilibrium P1 ~ 39 us / 4.7 ms
    CHECK(p1.back() == doctest::Approx(39.0 / 4700.0).epsilon(0.05));
  }
}

TEST_CASE("infidelity transform") {
  const LeakageRates rates{3.92e-4, 3.528e-3, 0.02};

  SUBCASE("identity at A=1, B=0") {
    const LeakageRates same = infidelity_transform(rates, 1.0, 0.0);
    CHECK(same.gamma_up == rates.gamma_up);
    CHECK(same.gamma_down == rates.gamma_down);
    CHECK(same.p0 == rates.p0);
  }
  SUBCASE("Gamma preserved exactly for any input") {
    RngStream rng(3);
    for (int i = 0; i < 100; ++i) {
      const LeakageRates r{1e-4 * rng.uniform(), 1e-2 * rng.uniform(), rng.uniform() * 0.2};
      const double a = 0.8 + 0.2 * rng.uniform();
      const double b = 1e-3 * rng.uniform();
      const LeakageRates tr = infidelity_transform(r, a, b);
      CHECK(tr.total() == doctest::Approx(r.total()).epsilon(1e-14));
    }
  }
  SUBCASE("paper matrix shrinks the quoted rate by about 10%") {
    const double a = 0.892, b = 0.5 * (5e-5 + 5e-4);
    const LeakageRates tr = infidelity_transform(rates, a, b);
    CHECK(tr.gamma_up / rates.gamma_up == doctest::Approx(0.89).epsilon(0.012));
  }
  SUBCASE("observed populations satisfy the transformed recursion exactly") {
    // algebraic identity: mapping p -> A p + B (1 - p) commutes with the
    // recursion when the rates are transformed
    RngStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const double gu = 1e-4 + 4e-4 * rng.uniform();
      const double gd = 1e-3 + 4e-3 * rng.uniform();
      const double p0 = 0.05 * rng.uniform();
      const double a = 0.85 + 0.15 * rng.uniform();
      const double b = 1e-3 * rng.uniform();
      const LeakageRates raw{gu, gd, p0};
      const LeakageRates obs = infidelity_transform(raw, a, b);
      double p = p0;
      for (int m = 0; m <= 200; ++m) {
        const double mapped = a * p + b * (1.0 - p);
        CHECK(std::abs(mapped - rate_eq_population(obs, m, true)) < 1e-12);
        p += gu * (1.0 - p) - gd * p;
      }
    }
  }
  SUBCASE("domain checks") {
    CHECK_THROWS_AS(infidelity_transform(rates, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(infidelity_transform(rates, 0.9, 1.0), std::invalid_argument);
  }
}

TEST_CASE("coherent random walk") {
  const double g = 2e-2;

  SUBCASE("randomized phases give mean |c2|^2 = m g^2") {
    RngStream rng(41);
    const int m_max = 400, trials = 2000;
    const auto mean = coherent_walk(m_max, g, 0.3, trials, true, rng);
    CHECK(mean[0] == 0.0);
    std::vector<double> ms, ys;
    for (int m = 1; m <= m_max; ++m) {
      ms.push_back(m);
      ys.push_back(mean[static_cast<size_t>(m)]);
    }
    const LinearFit lin = fit_linear(ms, ys);
    CHECK(lin.slope == doctest::Approx(g * g).epsilon(0.05));
    CHECK(lin.r_squared > 0.99);
  }
  SUBCASE("fully coherent sum grows quadratically") {
    RngStream rng(42);
    const auto mean = coherent_walk(100, g, 0.0, 1, false, rng);
    for (int m : {1, 10, 50, 100}) {
      CHECK(mean[static_cast<size_t>(m)] ==
            doctest::Approx(static_cast<double>(m) * m * g * g).epsilon(1e-9));
    }
  }
}

TEST_CASE("linear and power-law fits") {
  SUBCASE("exact linear data") {
    std::vector<double> x = {1, 2, 3, 4}, y = {4, 7, 10, 13};
    const LinearFit lin = fit_linear(x, y);
    CHECK(lin.slope == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(lin.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lin.r_squared == doctest::Approx(1.0));
  }
  SUBCASE("exact inverse-square data") {
    std::vector<double> x = {8, 10, 14, 20}, y;
    for (double xi : x) y.push_back(5.5 / (xi * xi));
    const PowerFit pw = fit_power(x, y);
    CHECK(pw.exponent == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(pw.prefactor == doctest::Approx(5.5).epsilon(1e-6));
  }
  SUBCASE("degenerate and invalid inputs") {
    std::vector<double> x = {2, 2, 2}, y = {1, 2, 3};
    CHECK_THROWS_AS(fit_linear(x, y), std::invalid_argument);
    std::vector<double> xn = {1, -2, 3}, yn = {1, 2, 3};
    CHECK_THROWS_AS(fit_power(xn, yn), std::invalid_argument);
  }
}
