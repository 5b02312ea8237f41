#include "btc/liouvillian.hpp"

#include <string>
#include <vector>

#include "btc/error.hpp"

namespace btc {

void ModelParams::validate() const {
  if (!(kappa > 0.0)) throw DomainError("kappa must be > 0, got " + std::to_string(kappa));
  if (n_spins < 1) throw DomainError("n_spins must be >= 1, got " + std::to_string(n_spins));
}

namespace lindblad {
namespace {

SparseCMatrix kron(const SparseCMatrix& a, const SparseCMatrix& b) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(static_cast<size_t>(a.nonZeros()) * b.nonZeros());
  for (int ca = 0; ca < a.outerSize(); ++ca) {
    for (SparseCMatrix::InnerIterator ia(a, ca); ia; ++ia) {
      for (int cb = 0; cb < b.outerSize(); ++cb) {
        for (SparseCMatrix::InnerIterator ib(b, cb); ib; ++ib) {
          triplets.emplace_back(ia.row() * b.rows() + ib.row(), ca * b.cols() + cb, ia.value() * ib.value());
        }
      }
    }
  }
  SparseCMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SparseCMatrix identity(int dim) {
  SparseCMatrix id(dim, dim);
  id.setIdentity();
  return id;
}

}  // namespace

spin::CollectiveOperator hamiltonian_matrix(const ModelParams& params) {
  params.validate();
  const auto sector = params.sector();
  const auto sx = spin::build_collective_operator(sector, spin::OperatorKind::Sx).matrix;
  const auto sz = spin::build_collective_operator(sector, spin::OperatorKind::Sz).matrix;
  const double s = sector.spin();

  SparseCMatrix h = params.omega0 * sx;
  if (params.omega_x != 0.0) h += (params.omega_x / s) * SparseCMatrix(sx * sx);
  if (params.omega_z != 0.0) h += (params.omega_z / s) * SparseCMatrix(sz * sz);
  h.prune(cplx(0.0));
  h.makeCompressed();
  return {sector, h};
}

Superoperator build_superoperator(const ModelParams& params, std::int64_t max_rows) {
  params.validate();
  const auto sector = params.sector();
  const int dim = sector.dim();
  const std::int64_t rows = static_cast<std::int64_t>(dim) * dim;
  if (rows > max_rows) {
    throw CapacityError("superoperator for n_spins=" + std::to_string(params.n_spins) + " has " +
                        std::to_string(rows) + " rows, above the cap of " + std::to_string(max_rows));
  }

  const SparseCMatrix h = hamiltonian_matrix(params).matrix;
  const SparseCMatrix sp = spin::build_collective_operator(sector, spin::OperatorKind::Splus).matrix;
  const SparseCMatrix sm = spin::build_collective_operator(sector, spin::OperatorKind::Sminus).matrix;
  const SparseCMatrix a = sp * sm;
  const SparseCMatrix id = identity(dim);
  const cplx i(0.0, 1.0);
  const double rate = params.kappa / sector.spin();

  // vec(X rho Y) = (Y^T (x) X) vec(rho)
  SparseCMatrix l = i * kron(h.transpose(), id) - i * kron(id, h);
  l += rate * (kron(sp.transpose(), sm) - 0.5 * kron(id, a) - 0.5 * kron(a.transpose(), id));
  l.prune(cplx(0.0));
  l.makeCompressed();
  return {params, sector, std::move(l)};
}

CVector apply_superoperator(const ModelParams& params, std::span<const cplx> rho_vec) {
  const LiouvillianStencil stencil(params);
  if (static_cast<Eigen::Index>(rho_vec.size()) != stencil.vec_size()) {
    throw DimensionError("apply_superoperator: vector length " + std::to_string(rho_vec.size()) +
                         " does not match (n_spins+1)^2 = " + std::to_string(stencil.vec_size()));
  }
  CVector out(stencil.vec_size());
  stencil.apply(rho_vec.data(), out.data());
  return out;
}

CVector apply_reference(const ModelParams& params, const CVector& rho_vec) {
  const auto sector = params.sector();
  const auto rho = spin::DensityMatrix::from_vec(sector, rho_vec).rho;
  const SparseCMatrix h = hamiltonian_matrix(params).matrix;
  const SparseCMatrix sp = spin::build_collective_operator(sector, spin::OperatorKind::Splus).matrix;
  const SparseCMatrix sm = spin::build_collective_operator(sector, spin::OperatorKind::Sminus).matrix;
  const SparseCMatrix a = sp * sm;
  const cplx i(0.0, 1.0);
  const double rate = params.kappa / sector.spin();

  CMatrix out = i * (rho * h - h * rho);
  out += rate * (sm * (rho * sp) - 0.5 * (a * rho + rho * a));
  return Eigen::Map<const CVector>(out.data(), out.size());
}

}  // namespace lindblad
}  // namespace btc
