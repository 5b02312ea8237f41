#include "btc/spin_algebra.hpp"

#include <cmath>
#include <vector>

#include "btc/error.hpp"

namespace btc::spin {

SpinSector::SpinSector(int n_spins) : n_spins_(n_spins) {
  if (n_spins < 1) throw DomainError("spin sector needs n_spins >= 1, got " + std::to_string(n_spins));
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Sx: return "Sx";
    case OperatorKind::Sy: return "Sy";
    case OperatorKind::Sz: return "Sz";
    case OperatorKind::Splus: return "Splus";
    case OperatorKind::Sminus: return "Sminus";
  }
  return "?";
}

double lowering_coefficient(const SpinSector& sector, int k) {
  const double s = sector.spin();
  const double m = sector.m_of(k);
  const double arg = s * (s + 1.0) - m * (m - 1.0);
  return arg > 0.0 ? std::sqrt(arg) : 0.0;
}

CollectiveOperator build_collective_operator(const SpinSector& sector, OperatorKind kind) {
  const int dim = sector.dim();
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(2 * dim);
  const cplx i(0.0, 1.0);

  // S-(k+1, k) = c_k, S+(k, k+1) = c_k with real c_k.
  for (int k = 0; k + 1 < dim; ++k) {
    const double c = lowering_coefficient(sector, k);
    switch (kind) {
      case OperatorKind::Sminus: triplets.emplace_back(k + 1, k, c); break;
      case OperatorKind::Splus: triplets.emplace_back(k, k + 1, c); break;
      case OperatorKind::Sx:
        triplets.emplace_back(k + 1, k, 0.5 * c);
        triplets.emplace_back(k, k + 1, 0.5 * c);
        break;
      case OperatorKind::Sy:
        // Sy = (S+ - S-) / 2i
        triplets.emplace_back(k, k + 1, c / (2.0 * i));
        triplets.emplace_back(k + 1, k, -c / (2.0 * i));
        break;
      case OperatorKind::Sz: break;
    }
  }
  if (kind == OperatorKind::Sz) {
    for (int k = 0; k < dim; ++k) triplets.emplace_back(k, k, sector.m_of(k));
  }

  CollectiveOperator op{sector, SparseCMatrix(dim, dim)};
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

DensityMatrix DensityMatrix::from_vec(const SpinSector& sector, const CVector& v) {
  const int dim = sector.dim();
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) {
    throw DimensionError("vectorized state has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(dim * dim));
  }
  return {sector, Eigen::Map<const CMatrix>(v.data(), dim, dim)};
}

double DensityMatrix::trace_error() const { return std::abs(rho.trace() - 1.0); }

double DensityMatrix::hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
  const CMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double DensityMatrix::purity() const { return (rho * rho).trace().real(); }

CVector coherent_amplitudes(const SpinSector& sector, double theta, double phi) {
  const int n = sector.two_s();
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double log_c = std::log(std::abs(c));
  const double log_s = std::log(std::abs(s));
  const double log_n_fact = std::lgamma(n + 1.0);

  CVector amp(sector.dim());
  for (int k = 0; k < sector.dim(); ++k) {
    // S + m = n - k up-spins, S - m = k down-spins.
    const int up = n - k;
    const int down = k;
    const double log_binom = log_n_fact - std::lgamma(up + 1.0) - std::lgamma(down + 1.0);
    double magnitude;
    if ((up > 0 && c == 0.0) || (down > 0 && s == 0.0)) {
      magnitude = 0.0;
    } else {
      double log_mag = 0.5 * log_binom;
      if (up > 0) log_mag += up * log_c;
      if (down > 0) log_mag += down * log_s;
      magnitude = std::exp(log_mag);
    }
    double sign = 1.0;
    if (c < 0.0 && up % 2 == 1) sign = -sign;
    if (s < 0.0 && down % 2 == 1) sign = -sign;
    amp[k] = sign * magnitude * std::polar(1.0, down * phi);
  }
  return amp;
}

DensityMatrix coherent_spin_state(const SpinSector& sector, double theta, double phi) {
  const CVector amp = coherent_amplitudes(sector, theta, phi);
  return {sector, amp * amp.adjoint()};
}

DensityMatrix dicke_state(const SpinSector& sector, int k) {
  if (k < 0 || k >= sector.dim()) throw DimensionError("Dicke index out of range");
  DensityMatrix out{sector, CMatrix::Zero(sector.dim(), sector.dim())};
  out.rho(k, k) = 1.0;
  return out;
}

DensityMatrix maximally_mixed(const SpinSector& sector) {
  const int dim = sector.dim();
  return {sector, CMatrix::Identity(dim, dim) / static_cast<double>(dim)};
}

cplx expectation(const DensityMatrix& rho, const CollectiveOperator& op) {
  if (!(rho.sector == op.sector)) {
    throw DimensionError("expectation: state has n_spins=" + std::to_string(rho.sector.n_spins()) +
                         " but operator has n_spins=" + std::to_string(op.sector.n_spins()));
  }
  // Tr(O rho) = sum_{k,l} O(k,l) rho(l,k)
  cplx acc = 0.0;
  for (int col = 0; col < op.matrix.outerSize(); ++col) {
    for (SparseCMatrix::InnerIterator it(op.matrix, col); it; ++it) {
      acc += it.value() * rho.rho(col, it.row());
    }
  }
  return acc;
}

}  // namespace btc::spin
