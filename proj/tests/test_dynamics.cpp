#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "btc/dynamics.hpp"
#include "btc/error.hpp"
#include "oracle.hpp"

using namespace btc;

namespace {

ModelParams model(int n, double w0, double wx = 0.0, double wz = 0.0) {
  ModelParams p;
  p.n_spins = n;
  p.omega0 = w0;
  p.omega_x = wx;
  p.omega_z = wz;
  return p;
}

oracle::Params to_oracle(const ModelParams& p) { return {p.n_spins, p.omega0, p.kappa, p.omega_x, p.omega_z}; }

// Dense-matrix traces of the collective observables.
struct Expect {
  double sx, sy, sz, vx, vy, vz;
};

Expect expect(const oracle::Mat& rho, int n) {
  const auto o = oracle::spin_matrices(n);
  const double s = 0.5 * n;
  const auto tr = [&](const oracle::Mat& a) { return (rho * a).trace().real(); };
  const double x = tr(o.sx), y = tr(o.sy), z = tr(o.sz);
  return {x / s, y / s, z / s, (tr(o.sx * o.sx) - x * x) / s, (tr(o.sy * o.sy) - y * y) / s,
          (tr(o.sz * o.sz) - z * z) / s};
}

}  // namespace

TEST_CASE("observables of a state") {
  std::mt19937 rng(21);
  for (int n : {1, 2, 5, 10}) {
    const spin::SpinSector sector(n);
    const spin::DensityMatrix rho{sector, oracle::random_density(n + 1, rng)};
    const auto r = dynamics::measure(rho, 0.25);
    const auto e = expect(rho.rho, n);
    CHECK(r.t == 0.25);
    CHECK(r.sx == doctest::Approx(e.sx).epsilon(1e-12));
    CHECK(r.sy == doctest::Approx(e.sy).epsilon(1e-12));
    CHECK(r.sz == doctest::Approx(e.sz).epsilon(1e-12));
    CHECK(r.var_x == doctest::Approx(e.vx).epsilon(1e-12));
    CHECK(r.var_y == doctest::Approx(e.vy).epsilon(1e-12));
    CHECK(r.var_z == doctest::Approx(e.vz).epsilon(1e-12));
    CHECK(r.trace == doctest::Approx(1.0));
    CHECK(r.purity == doctest::Approx((rho.rho * rho.rho).trace().real()));
  }
  // Coherent states have variance 1/2 transverse to the Bloch vector.
  const auto c = dynamics::measure(spin::coherent_spin_state(spin::SpinSector(30), std::numbers::pi / 2, 0.0));
  CHECK(c.sx == doctest::Approx(1.0));
  CHECK(c.var_x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.var_y == doctest::Approx(0.5));
  CHECK(c.var_z == doctest::Approx(0.5));
}

TEST_CASE("RK4 matches the matrix exponential") {
  for (const auto& p : {model(2, 1.5), model(2, 2.0, 0.3, 1.2), model(3, 0.5, 0.0, 0.7)}) {
    const spin::SpinSector sector(p.n_spins);
    const auto rho0 = spin::coherent_spin_state(sector, 1.1, 0.4);
    dynamics::EvolveOptions opt;
    opt.t_max = 3.0;
    opt.dt = 0.005;
    opt.stride = 100;
    const auto traj = dynamics::evolve(p, rho0, opt);
    const oracle::Mat l = oracle::lindbladian(to_oracle(p));
    const oracle::Mat prop = (l * 3.0).exp();
    const oracle::Vec v = prop * rho0.vec();
    CHECK((traj.final_state.vec() - v).cwiseAbs().maxCoeff() < 1e-8);
    for (const auto& r : traj.records) {
      const oracle::Vec vt = (l * r.t).exp() * rho0.vec();
      const auto e = expect(Eigen::Map<const oracle::Mat>(vt.data(), p.n_spins + 1, p.n_spins + 1), p.n_spins);
      CHECK(std::abs(r.sz - e.sz) < 1e-8);
      CHECK(std::abs(r.sx - e.sx) < 1e-8);
    }
  }
}

TEST_CASE("trajectory bookkeeping") {
  const auto p = model(20, 1.5);
  const auto rho0 = spin::coherent_spin_state(p.sector(), std::numbers::pi / 2, 0.0);
  dynamics::EvolveOptions opt;
  opt.t_max = 1.0;
  opt.dt = 0.01;
  opt.stride = 10;
  const auto traj = dynamics::evolve(p, rho0, opt);
  REQUIRE(traj.records.size() == 11);
  CHECK(traj.records.front().t == 0.0);
  CHECK(traj.records.back().t == doctest::Approx(1.0));
  CHECK(traj.times().size() == 11);
  CHECK(traj.column("sz").size() == 11);
  CHECK_THROWS_AS(traj.column("bogus"), DomainError);
  CHECK(traj.max_trace_drift < 1e-12);
  CHECK(traj.max_hermiticity_error < 1e-12);
  CHECK(traj.final_state.min_eigenvalue() > -1e-10);

  opt.stride = 7;
  CHECK(dynamics::evolve(p, rho0, opt).records.size() == 16);
}

TEST_CASE("invalid evolution requests") {
  const auto p = model(20, 1.5);
  const auto rho0 = spin::coherent_spin_state(p.sector(), 1.0, 0.0);
  dynamics::EvolveOptions opt;
  opt.dt = 0.0;
  CHECK_THROWS_AS(dynamics::evolve(p, rho0, opt), DomainError);
  opt.dt = 0.01;
  opt.stride = 0;
  CHECK_THROWS_AS(dynamics::evolve(p, rho0, opt), DomainError);
  opt.stride = 1;
  opt.t_max = -1.0;
  CHECK_THROWS_AS(dynamics::evolve(p, rho0, opt), DomainError);
  opt.t_max = 1.0;
  opt.dt = 2.0;
  CHECK_THROWS_AS(dynamics::evolve(p, rho0, opt), DomainError);
  opt.dt = 0.01;
  CHECK_THROWS_AS(dynamics::evolve(model(21, 1.5), rho0, opt), DimensionError);
}

TEST_CASE("spectral radius bound dominates the spectrum") {
  for (const auto& p : {model(3, 1.5), model(6, 2.0, 0.4, 1.2)}) {
    Eigen::ComplexEigenSolver<oracle::Mat> es(oracle::lindbladian(to_oracle(p)), false);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= dynamics::spectral_radius_bound(p));
  }
}

TEST_CASE("steady state") {
  for (const auto& p : {model(4, 0.5), model(6, 1.5), model(5, 2.0, 0.3, 1.2)}) {
    // Oracle: kernel vector of the dense Lindbladian, normalized to unit trace.
    const oracle::Mat l = oracle::lindbladian(to_oracle(p));
    Eigen::FullPivLU<oracle::Mat> lu(l);
    REQUIRE(lu.dimensionOfKernel() == 1);
    oracle::Vec k = lu.kernel().col(0);
    const int d = p.n_spins + 1;
    oracle::Mat rho = Eigen::Map<const oracle::Mat>(k.data(), d, d);
    rho /= rho.trace();
    for (auto method : {dynamics::NessMethod::SparseLU, dynamics::NessMethod::InverseIteration}) {
      dynamics::NessOptions opt;
      opt.method = method;
      const auto ness = dynamics::steady_state(p, opt);
      CHECK(ness.residual < 1e-9);
      CHECK((ness.rho.rho - rho).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(dynamics::ness_residual(p, ness.rho) == doctest::Approx(ness.residual));
    }
  }
  // Weak drive: spins stay near the south pole.
  const auto weak = dynamics::steady_state(model(60, 0.3));
  CHECK(dynamics::measure(weak.rho).sz < -0.9);

  dynamics::NessOptions small;
  small.max_rows = 100;
  CHECK_THROWS_AS(dynamics::steady_state(model(30, 1.5), small), CapacityError);
}
