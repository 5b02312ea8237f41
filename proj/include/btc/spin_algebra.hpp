#pragma once

#include <complex>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace btc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using SparseCMatrix = Eigen::SparseMatrix<cplx>;

namespace spin {

/// Symmetric (maximal total spin) sector of n_spins spin-1/2 particles.
///
/// Basis index k = 0..n_spins holds |S, m> with m = S - k, so index 0 is the
/// fully polarized m = +S state. Every module shares this ordering.
class SpinSector {
 public:
  explicit SpinSector(int n_spins);

  int n_spins() const { return n_spins_; }
  /// 2S, kept as an integer so half-integer spins are exact.
  int two_s() const { return n_spins_; }
  double spin() const { return 0.5 * n_spins_; }
  int dim() const { return n_spins_ + 1; }
  double m_of(int k) const { return 0.5 * n_spins_ - k; }

  friend bool operator==(const SpinSector&, const SpinSector&) = default;

 private:
  int n_spins_;
};

enum class OperatorKind { Sx, Sy, Sz, Splus, Sminus };

std::string_view to_string(OperatorKind kind);

struct CollectiveOperator {
  SpinSector sector;
  SparseCMatrix matrix;

  CMatrix dense() const { return CMatrix(matrix); }
};

CollectiveOperator build_collective_operator(const SpinSector& sector, OperatorKind kind);

/// sqrt(S(S+1) - m(m-1)): the amplitude of S- taking basis index k to k+1.
double lowering_coefficient(const SpinSector& sector, int k);

struct DensityMatrix {
  SpinSector sector;
  CMatrix rho;

  /// Column-major vectorization: vec[k + dim * l] == rho(k, l).
  CVector vec() const { return Eigen::Map<const CVector>(rho.data(), rho.size()); }
  static DensityMatrix from_vec(const SpinSector& sector, const CVector& v);

  double trace_error() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;
  double purity() const;
};

/// |theta, phi><theta, phi| for the coherent state with Bloch vector
/// (sin t cos p, sin t sin p, cos t).
DensityMatrix coherent_spin_state(const SpinSector& sector, double theta, double phi);

/// Dicke amplitudes c_k of the coherent state, evaluated in log space.
CVector coherent_amplitudes(const SpinSector& sector, double theta, double phi);

DensityMatrix dicke_state(const SpinSector& sector, int k);
DensityMatrix maximally_mixed(const SpinSector& sector);

/// Tr(op * rho). Throws DimensionError on sector mismatch.
cplx expectation(const DensityMatrix& rho, const CollectiveOperator& op);

}  // namespace spin
}  // namespace btc
