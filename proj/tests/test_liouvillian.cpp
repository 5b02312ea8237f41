#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include "btc/error.hpp"
#include "btc/liouvillian.hpp"
#include "oracle.hpp"

using namespace btc;

namespace {

ModelParams model(int n, double w0, double wx, double wz, double kappa = 1.0) {
  ModelParams p;
  p.n_spins = n;
  p.omega0 = w0;
  p.omega_x = wx;
  p.omega_z = wz;
  p.kappa = kappa;
  return p;
}

oracle::Params to_oracle(const ModelParams& p) { return {p.n_spins, p.omega0, p.kappa, p.omega_x, p.omega_z}; }

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

const ModelParams kCases[] = {model(1, 1.5, 0, 0), model(2, 0.5, 0, 0), model(3, 2.0, 0.3, 1.2),
                              model(5, 1.1, -0.4, 0.7, 0.6), model(6, 0.0, 0.0, 0.9)};

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(model(4, 1, 0, 0, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(model(4, 1, 0, 0, -1.0).validate(), DomainError);
  CHECK_THROWS_AS(model(0, 1, 0, 0).validate(), DomainError);
  CHECK_NOTHROW(model(1, 0, 0, 0).validate());
}

TEST_CASE("hamiltonian") {
  for (const auto& p : kCases) {
    CHECK(max_abs(lindblad::hamiltonian_matrix(p).dense() - oracle::hamiltonian(to_oracle(p))) < 1e-13);
  }
}

TEST_CASE("materialized superoperator equals the dense master equation") {
  for (const auto& p : kCases) {
    const auto l = lindblad::build_superoperator(p);
    CHECK(l.rows() == (p.n_spins + 1) * (p.n_spins + 1));
    CHECK(max_abs(CMatrix(l.matrix) - oracle::lindbladian(to_oracle(p))) < 1e-12);
  }
}

TEST_CASE("matrix-free kernels equal the materialized superoperator") {
  std::mt19937 rng(11);
  for (const auto& p : {model(8, 1.5, 0, 0), model(8, 2.0, 0.4, 1.2), model(13, 0.7, -0.3, 0.2, 2.0)}) {
    const auto l = lindblad::build_superoperator(p);
    const lindblad::LiouvillianStencil stencil(p);
    const CVector x = oracle::random_vector(static_cast<int>(l.rows()), rng);
    const CVector expected = l.matrix * x;
    CVector y(x.size());
    stencil.apply(x, y);
    const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());
    CHECK((y - expected).cwiseAbs().maxCoeff() < 1e-12 * scale);
    CHECK((lindblad::apply_reference(p, x) - expected).cwiseAbs().maxCoeff() < 1e-12 * scale);
    const CVector z = lindblad::apply_superoperator(p, std::span<const cplx>(x.data(), x.size()));
    CHECK((z - expected).cwiseAbs().maxCoeff() < 1e-12 * scale);
  }
}

TEST_CASE("stencil output does not depend on the thread count") {
  const auto p = model(60, 1.5, 0.2, 0.8);
  const lindblad::LiouvillianStencil stencil(p);
  std::mt19937 rng(3);
  const CVector x = oracle::random_vector(static_cast<int>(stencil.vec_size()), rng);
  CVector a(x.size()), b(x.size());
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  stencil.apply(x, a);
  omp_set_num_threads(4);
  stencil.apply(x, b);
  omp_set_num_threads(saved);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trace and Hermiticity preservation") {
  std::mt19937 rng(5);
  for (const auto& p : kCases) {
    const int d = p.n_spins + 1;
    const lindblad::LiouvillianStencil stencil(p);
    const CMatrix rho = oracle::random_density(d, rng);
    const CVector v = Eigen::Map<const CVector>(rho.data(), d * d);
    CVector out(v.size());
    stencil.apply(v, out);
    const CMatrix drho = Eigen::Map<const CMatrix>(out.data(), d, d);
    CHECK(std::abs(drho.trace()) < 1e-12);
    CHECK(max_abs(drho - drho.adjoint()) < 1e-12);
  }
}

TEST_CASE("size guards") {
  const auto p = model(30, 1.5, 0, 0);
  CHECK_THROWS_AS(lindblad::build_superoperator(p, 100), CapacityError);
  const CVector wrong = CVector::Zero(10);
  CHECK_THROWS_AS(lindblad::apply_superoperator(p, std::span<const cplx>(wrong.data(), wrong.size())), DimensionError);
  CHECK_THROWS_AS(lindblad::apply_reference(p, wrong), DimensionError);
}
