#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "btc/error.hpp"
#include "btc/meanfield.hpp"
#include "oracle.hpp"

using namespace btc;
using namespace btc::meanfield;

namespace {

ModelParams model(double w0, double wx = 0.0, double wz = 0.0, double kappa = 1.0) {
  ModelParams p;
  p.omega0 = w0;
  p.omega_x = wx;
  p.omega_z = wz;
  p.kappa = kappa;
  return p;
}

oracle::Params to_oracle(const ModelParams& p) { return {p.n_spins, p.omega0, p.kappa, p.omega_x, p.omega_z}; }

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<double> g;
  Vec3 v{g(rng), g(rng), g(rng)};
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

template <class F>
std::pair<double, double> range_of(const MfTrajectory& traj, F get) {
  double lo = 1e300, hi = -1e300;
  for (const auto& r : traj.records) {
    const double v = get(r);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("vector field and Jacobian") {
  std::mt19937 rng(8);
  for (const auto& p : {model(1.5), model(2.0, 0.0, 1.2), model(0.7, -0.4, 0.3, 2.0)}) {
    for (int i = 0; i < 20; ++i) {
      const Vec3 m = random_unit(rng);
      const Vec3 f = mf_derivative(m, p);
      const auto o = oracle::field(m, to_oracle(p));
      for (int c = 0; c < 3; ++c) CHECK(f[c] == doctest::Approx(o[c]).epsilon(1e-14));
      // The flow is tangent to the sphere.
      CHECK(std::abs(m[0] * f[0] + m[1] * f[1] + m[2] * f[2]) < 1e-14);
      const auto jac = mf_jacobian(m, p);
      const double h = 1e-6;
      for (int c = 0; c < 3; ++c) {
        auto mp = m, mm = m;
        mp[c] += h;
        mm[c] -= h;
        const auto fp = oracle::field(mp, to_oracle(p)), fm = oracle::field(mm, to_oracle(p));
        for (int r = 0; r < 3; ++r) CHECK(std::abs(jac[r][c] - (fp[r] - fm[r]) / (2 * h)) < 1e-8);
      }
    }
  }
  const Vec3 b = bloch_vector(std::numbers::pi / 2, 0.0);
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(std::abs(b[2]) < 1e-15);
}

TEST_CASE("weak drive relaxes to the lower fixed point") {
  const auto p = model(0.5);
  MfOptions opt;
  opt.t_max = 60.0;
  const auto traj = mf_integrate({1.0, 0.0, 0.0}, p, opt);
  const Vec3 expected{0.0, 0.5, -std::sqrt(0.75)};
  CHECK(dist(traj.records.back().m, expected) < 1e-8);
}

TEST_CASE("M is conserved in the linearly driven model") {
  const auto p = model(1.5);
  MfOptions opt;
  opt.t_max = 200.0;
  for (auto integ : {Integrator::Adaptive, Integrator::RK4}) {
    opt.integrator = integ;
    const auto traj = mf_integrate(bloch_vector(std::numbers::pi / 2, 0.0), p, opt);
    const auto [lo, hi] = range_of(traj, [](const ConservedRecord& r) { return *r.M; });
    CHECK(hi - lo < 1e-9);
    CHECK(traj.max_norm_drift < 1e-9);
    const double m0 = *conserved_M({1.0, 0.0, 0.0}, p);
    CHECK(m0 == doctest::Approx(1.0 / (0.0 - 1.5)));
  }
  CHECK_THROWS_AS(conserved_M({1, 0, 0}, model(1.5, 0.0, 0.2)), DomainError);
  CHECK(!conserved_M({0.0, 1.5, 0.0}, p).has_value());
}

TEST_CASE("R is conserved on closed orbits, across the branch line") {
  const auto p = model(2.0, 0.0, 1.2);
  MfOptions opt;
  opt.t_max = 100.0;
  const auto traj = mf_integrate(from_qp(-0.375, std::numbers::pi / 8), p, opt);
  const auto [lo, hi] = range_of(traj, [](const ConservedRecord& r) { return *r.R; });
  CHECK(hi - lo < 1e-9);
  bool crossed = false;
  for (const auto& r : traj.records) {
    crossed = crossed || r.branch_n != 0;
    CHECK(r.reality_residual < 1e-10);
  }
  CHECK(crossed);
}

TEST_CASE("R with a nonzero quadratic x term") {
  // The second orbit spirals into an attractor, where z -> 0 and both terms
  // of R diverge; only the early part is resolvable in double precision.
  for (auto [p, t_max] : {std::pair{model(1.5, 0.3, 1.0), 50.0}, {model(1.2, -0.5, 0.6), 10.0}}) {
    REQUIRE(has_conserved_R(p));
    MfOptions opt;
    opt.t_max = t_max;
    const auto traj = mf_integrate(from_qp(-0.2, 0.7), p, opt);
    const auto [lo, hi] = range_of(traj, [](const ConservedRecord& r) { return *r.R; });
    CHECK(hi - lo < 1e-8 * std::max(1.0, std::abs(lo)));
  }
  CHECK(!has_conserved_R(model(1.5, 1.0, 0.3)));
  CHECK_THROWS_AS(conserved_R({1, 0, 0}, model(1.5, 1.0, 0.3)), DomainError);
}

TEST_CASE("R reduces to the arctangent of M") {
  std::mt19937 rng(2);
  for (int i = 0; i < 10; ++i) {
    Vec3 m = random_unit(rng);
    const auto p0 = model(1.5);
    const double expected = 2.0 * std::atan(*conserved_M(m, p0));
    CHECK(conserved_R(m, p0).R == doctest::Approx(expected).epsilon(1e-12));
    const double small = conserved_R(m, model(1.5, 0.0, 1e-9)).R;
    // Equal up to the 2 pi kappa branch ambiguity.
    const double diff = std::remainder(small - expected, 2.0 * std::numbers::pi);
    CHECK(std::abs(diff) < 1e-6);
  }
}

TEST_CASE("fixed points") {
  SUBCASE("nontrivial pair") {
    const auto p = model(1.0, 0.0, 1.0);
    const auto fps = fixed_points(p);
    for (double sign : {1.0, -1.0}) {
      const Vec3 expected{0.4, 0.2, sign * std::sqrt(0.8)};
      bool found = false;
      for (const auto& fp : fps) found = found || dist(fp.m, expected) < 1e-12;
      CHECK(found);
    }
  }
  SUBCASE("agreement with an independent Newton solve") {
    for (const auto& p : {model(2.0, 0.0, 1.2), model(1.5, 0.4, 0.9), model(0.5)}) {
      const auto fps = fixed_points(p);
      REQUIRE(!fps.empty());
      for (const auto& fp : fps) {
        const auto polished = oracle::newton(fp.m, to_oracle(p));
        CHECK(dist(polished, fp.m) < 1e-12);
        CHECK(fp.residual < 1e-12);
      }
    }
  }
  SUBCASE("only the equatorial pair above the bifurcation") {
    const auto fps = fixed_points(model(2.0, 0.0, 0.5));
    REQUIRE(fps.size() == 2);
    for (const auto& fp : fps) CHECK(std::abs(fp.m[2]) < 1e-12);
  }
  SUBCASE("stability of the four points") {
    const auto fps = fixed_points(model(2.0, 0.0, 1.2));
    REQUIRE(fps.size() == 4);
    int counts[4] = {0, 0, 0, 0};
    for (const auto& fp : fps) ++counts[static_cast<int>(fp.stability)];
    CHECK(counts[static_cast<int>(Stability::CenterLike)] == 1);
    CHECK(counts[static_cast<int>(Stability::Attracting)] == 1);
    CHECK(counts[static_cast<int>(Stability::Repelling)] == 1);
    CHECK(counts[static_cast<int>(Stability::Saddle)] == 1);
  }
}

TEST_CASE("linear stability labels") {
  CHECK(classify({cplx(0, 1), cplx(0, -1)}) == Stability::CenterLike);
  CHECK(classify({cplx(-0.2, 1), cplx(-0.2, -1)}) == Stability::Attracting);
  CHECK(classify({cplx(0.2, 1), cplx(0.2, -1)}) == Stability::Repelling);
  CHECK(classify({cplx(1.0, 0), cplx(-1.0, 0)}) == Stability::Saddle);
  CHECK(to_string(Stability::Saddle) == "saddle");
}

TEST_CASE("canonical coordinates") {
  for (auto [q, pp] : {std::pair{0.3, 0.2}, {-0.9, 1.4}, {0.0, 0.0}}) {
    const Vec3 m = from_qp(q, pp);
    CHECK(m[0] * m[0] + m[1] * m[1] + m[2] * m[2] == doctest::Approx(1.0));
    const auto [q2, p2] = to_qp(m);
    CHECK(q2 == doctest::Approx(q));
    CHECK(p2 == doctest::Approx(pp));
  }
}

TEST_CASE("orbit classification") {
  const auto p = model(1.5);
  const auto fps = fixed_points(p);
  const Vec3 m0 = from_qp(-0.3, 0.4);
  const auto res = classify_orbit(m0, p, fps);
  REQUIRE(res.cls == OrbitClass::Closed);
  REQUIRE(res.period.has_value());
  CHECK(dist(mf_propagate(m0, p, *res.period), m0) < 1e-6);

  const auto p2 = model(2.0, 0.0, 1.2);
  const auto spiral = classify_orbit(from_qp(-0.875, 0.0), p2, fixed_points(p2));
  CHECK(spiral.cls == OrbitClass::Attracted);
}

TEST_CASE("phase portraits") {
  PortraitOptions opt;
  opt.n_q = 6;
  opt.n_p = 6;
  const auto below = phase_portrait(model(1.5), opt);
  CHECK(below.seeds.size() == 36);
  CHECK(below.fraction(OrbitClass::Closed) == 1.0);
  CHECK(below.seeds[0].q == doctest::Approx(-1.0 + 1.0 / 6));
  CHECK(below.seeds[1].p == doctest::Approx(std::numbers::pi / 6));

  opt.trace_dt = 0.5;
  opt.trace_t_max = 5.0;
  const auto above = phase_portrait(model(2.0, 0.0, 1.2), opt);
  CHECK(above.fraction(OrbitClass::Closed) > 0.0);
  CHECK(above.fraction(OrbitClass::Attracted) > 0.0);
  CHECK(above.fraction(OrbitClass::Closed) + above.fraction(OrbitClass::Attracted) == doctest::Approx(1.0));
  CHECK(above.seeds[0].trace.size() == 11);

  CHECK(analytic_transition(model(2.0)).value() == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(!analytic_transition(model(0.8)).has_value());
}

TEST_CASE("time-reversal symmetry") {
  for (const auto& p : {model(1.5), model(2.0, 0.0, 1.2)}) {
    MfOptions opt;
    opt.t_max = 10.0;
    const auto traj = mf_integrate(from_qp(-0.4, 0.3), p, opt);
    const auto rep = involution_check(traj);
    CHECK(rep.passed);
    CHECK(rep.mismatch < 1e-8);
  }
}

TEST_CASE("integration input checks") {
  CHECK_THROWS_AS(mf_integrate({1.0, 0.1, 0.0}, model(1.5)), DomainError);
  MfOptions opt;
  opt.dt = 0.0;
  CHECK_THROWS_AS(mf_integrate({1.0, 0.0, 0.0}, model(1.5), opt), DomainError);
}
