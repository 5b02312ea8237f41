#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "btc/error.hpp"
#include "btc/signal.hpp"

using namespace btc;

namespace {

struct Series {
  std::vector<double> t, x;
};

Series sample(int n, double dt, const auto& f) {
  Series s;
  for (int i = 0; i < n; ++i) {
    s.t.push_back(i * dt);
    s.x.push_back(f(i * dt));
  }
  return s;
}

}  // namespace

TEST_CASE("periodogram locates a sinusoid") {
  const double w = 2.0 * std::numbers::pi * 25.0 / (1024 * 0.05);  // on a bin
  const auto s = sample(1024, 0.05, [&](double t) { return 0.3 + std::sin(w * t); });
  for (auto taper : {signal::Taper::None, signal::Taper::Hann}) {
    const auto pg = signal::periodogram(s.t, s.x, 0.0, taper);
    CHECK(pg.frequencies.size() == 513);
    CHECK(pg.peak_frequency() == doctest::Approx(w).epsilon(1e-12));
    CHECK(*std::max_element(pg.power.begin(), pg.power.end()) == 1.0);
    CHECK(pg.power[0] < 1e-10);
  }
  const auto off_bin = sample(1000, 0.1, [](double t) { return std::cos(1.234 * t); });
  const auto pg = signal::periodogram(off_bin.t, off_bin.x, 0.0, signal::Taper::Hann);
  const double bin = 2.0 * std::numbers::pi / (1000 * 0.1);
  CHECK(std::abs(pg.peak_frequency() - 1.234) <= 0.5 * bin);
}

TEST_CASE("one-sided power sums to the variance") {
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  for (int n : {64, 101, 512}) {
    Series s;
    for (int i = 0; i < n; ++i) {
      s.t.push_back(0.1 * i);
      s.x.push_back(g(rng));
    }
    const double mean = std::accumulate(s.x.begin(), s.x.end(), 0.0) / n;
    double var = 0.0;
    for (double v : s.x) var += (v - mean) * (v - mean);
    var /= n;
    const auto pg = signal::periodogram(s.t, s.x);
    CHECK(pg.variance == doctest::Approx(var).epsilon(1e-12));
    CHECK(std::accumulate(pg.raw_power.begin(), pg.raw_power.end(), 0.0) == doctest::Approx(var).epsilon(1e-12));
  }
}

TEST_CASE("periodogram input checks") {
  const auto s = sample(200, 0.1, [](double t) { return std::sin(t); });
  CHECK_THROWS_AS(signal::periodogram(s.t, std::vector<double>(10, 0.0)), DimensionError);
  CHECK_THROWS_AS(signal::periodogram(s.t, s.x, 15.0), DomainError);
  auto bad = s;
  bad.t[50] += 0.03;
  CHECK_THROWS_AS(signal::periodogram(bad.t, bad.x), DomainError);
  const auto flat = signal::periodogram(s.t, std::vector<double>(200, 2.0));
  CHECK(std::all_of(flat.power.begin(), flat.power.end(), [](double p) { return p == 0.0; }));
  // Discarding keeps t >= discard.
  const auto late = signal::periodogram(s.t, s.x, 5.0);
  CHECK(late.n_samples == 150);
}

TEST_CASE("damped oscillation fit") {
  for (double offset : {0.0, -0.7, 3.0}) {
    const auto s = sample(6000, 0.01, [&](double t) { return offset + 0.8 * std::exp(-0.13 * t) * std::cos(2.2 * t + 0.4); });
    const auto fit = signal::decay_rate_fit(s.t, s.x);
    REQUIRE(fit.has_value());
    CHECK(fit->eta == doctest::Approx(0.13).epsilon(5e-3));
    CHECK(fit->frequency == doctest::Approx(2.2).epsilon(5e-3));
    CHECK(fit->n_peaks_used >= 5);
    CHECK(fit->residual < 1e-2);
  }
}

TEST_CASE("fit declines unusable data") {
  const auto flat = sample(500, 0.1, [](double) { return 1.0; });
  CHECK(!signal::decay_rate_fit(flat.t, flat.x).has_value());
  const auto monotone = sample(500, 0.1, [](double t) { return std::exp(-t); });
  CHECK(!signal::decay_rate_fit(monotone.t, monotone.x).has_value());
  CHECK_THROWS_AS(signal::decay_rate_fit(flat.t, std::vector<double>(3, 0.0)), DimensionError);
}

TEST_CASE("eta scaling input checks") {
  ModelParams p;
  CHECK_THROWS_AS(signal::eta_scaling(p, {10, 12}), DomainError);
  const auto fit = signal::fit_eta_power_law({{10, 0.1}, {20, 0.05}, {40, 0.025}});
  CHECK(fit.exponent == doctest::Approx(-1.0));
}

TEST_CASE("eta scaling on small systems") {
  ModelParams p;
  p.omega0 = 1.5;
  signal::EtaScalingOptions opt;
  opt.evolve.t_max = 60.0;
  const auto res = signal::eta_scaling(p, {8, 10, 12}, opt);
  REQUIRE(res.table.size() == 3);
  for (const auto& row : res.table) {
    REQUIRE(row.fit.has_value());
    REQUIRE(row.re_lambda_ref.has_value());
    CHECK(row.fit->eta == doctest::Approx(*row.re_lambda_ref).epsilon(0.05));
  }
  CHECK(res.beta > 0.0);
}
