#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "btc/spin_algebra.hpp"

namespace btc {

/// Parameters of the driven-dissipative collective spin model
///   d rho/dt = i[rho, H] + (kappa/S)(S- rho S+ - 1/2 {S+ S-, rho}),
///   H = omega0 Sx + (omega_x/S) Sx^2 + (omega_z/S) Sz^2.
/// Frequencies are absolute; kappa = 1 makes them "units of kappa".
struct ModelParams {
  double omega0 = 1.5;
  double kappa = 1.0;
  double omega_x = 0.0;
  double omega_z = 0.0;
  int n_spins = 20;

  /// Throws DomainError unless kappa > 0 and n_spins >= 1.
  void validate() const;
  spin::SpinSector sector() const { return spin::SpinSector(n_spins); }
  double spin() const { return 0.5 * n_spins; }
};

namespace lindblad {

/// Refuse to materialize superoperators with more rows than this.
inline constexpr std::int64_t kDefaultMaxRows = 4'000'000;

struct Superoperator {
  ModelParams params;
  spin::SpinSector sector;
  /// Acts on column-major vec(rho): vec[k + dim * l] == rho(k, l).
  SparseCMatrix matrix;

  Eigen::Index rows() const { return matrix.rows(); }
};

spin::CollectiveOperator hamiltonian_matrix(const ModelParams& params);

/// Assembles L from Kronecker products,
///   L = i(H^T (x) 1) - i(1 (x) H) + (kappa/S)[(S+^T (x) S-) - 1/2 (1 (x) A) - 1/2 (A^T (x) 1)],
/// with A = S+ S-. Throws CapacityError when (N+1)^2 > max_rows.
Superoperator build_superoperator(const ModelParams& params, std::int64_t max_rows = kDefaultMaxRows);

/// Matrix-free L vec(rho); O(dim^2) per call, no materialization.
CVector apply_superoperator(const ModelParams& params, std::span<const cplx> rho_vec);

/// Banded coefficients of H and the dissipator used by the matrix-free kernels.
class LiouvillianStencil {
 public:
  explicit LiouvillianStencil(const ModelParams& params);

  int dim() const { return dim_; }
  Eigen::Index vec_size() const { return static_cast<Eigen::Index>(dim_) * dim_; }
  const ModelParams& params() const { return params_; }

  /// H(k, k + offset) for offset in [-2, 2]; zero outside the matrix.
  double h(int k, int offset) const { return h_band_[offset + 2][k]; }
  double lowering(int k) const { return lower_[k]; }
  double decay_diag(int k) const { return a_diag_[k]; }
  double rate() const { return rate_; }

  /// out = L in, OpenMP-parallel over columns of rho.
  void apply(const cplx* in, cplx* out) const;
  void apply(const CVector& in, CVector& out) const { apply(in.data(), out.data()); }

 private:
  ModelParams params_;
  int dim_;
  double rate_;
  std::array<std::vector<double>, 5> h_band_;
  std::vector<double> lower_;
  std::vector<double> a_diag_;
};

/// Serial reference for LiouvillianStencil::apply built from sparse operator
/// products i(rho H - H rho) + (kappa/S)(S- rho S+ - 1/2 {A, rho}).
CVector apply_reference(const ModelParams& params, const CVector& rho_vec);

}  // namespace lindblad
}  // namespace btc
