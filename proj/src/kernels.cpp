// Matrix-free Liouvillian kernel. Each output element is independent, so the
// column loop parallelizes without reductions and results are bitwise
// identical for any thread count.

#include "btc/liouvillian.hpp"

namespace btc::lindblad {

LiouvillianStencil::LiouvillianStencil(const ModelParams& params)
    : params_(params), dim_(params.n_spins + 1), rate_(params.kappa / params.spin()) {
  params.validate();
  const auto sector = params.sector();
  const SparseCMatrix h = hamiltonian_matrix(params).matrix;
  for (auto& band : h_band_) band.assign(dim_, 0.0);
  for (int col = 0; col < h.outerSize(); ++col) {
    for (SparseCMatrix::InnerIterator it(h, col); it; ++it) {
      const int offset = col - static_cast<int>(it.row());
      h_band_[offset + 2][it.row()] = it.value().real();
    }
  }
  lower_.resize(dim_);
  a_diag_.resize(dim_);
  for (int k = 0; k < dim_; ++k) {
    lower_[k] = spin::lowering_coefficient(sector, k);
    // (S+ S-)(k, k) = c_k^2
    a_diag_[k] = lower_[k] * lower_[k];
  }
}

void LiouvillianStencil::apply(const cplx* in, cplx* out) const {
  const int dim = dim_;
  const double half_rate = 0.5 * rate_;
  const auto& hb = h_band_;
  const auto& low = lower_;
  const auto& ad = a_diag_;

#pragma omp parallel for schedule(static)
  for (int l = 0; l < dim; ++l) {
    const cplx* col = in + static_cast<std::ptrdiff_t>(l) * dim;
    cplx* dst = out + static_cast<std::ptrdiff_t>(l) * dim;
    for (int k = 0; k < dim; ++k) {
      cplx rho_h = 0.0;  // (rho H)(k, l) = sum_j rho(k, j) H(j, l)
      cplx h_rho = 0.0;  // (H rho)(k, l) = sum_j H(k, j) rho(j, l)
      for (int o = -2; o <= 2; ++o) {
        const int j = l - o;
        if (j >= 0 && j < dim) rho_h += in[k + static_cast<std::ptrdiff_t>(j) * dim] * hb[o + 2][j];
        const int jk = k + o;
        if (jk >= 0 && jk < dim) h_rho += hb[o + 2][k] * col[jk];
      }
      const cplx commutator = rho_h - h_rho;
      cplx acc(-commutator.imag(), commutator.real());  // i * commutator
      if (k > 0 && l > 0) acc += rate_ * low[k - 1] * low[l - 1] * in[(k - 1) + static_cast<std::ptrdiff_t>(l - 1) * dim];
      acc -= half_rate * (ad[k] + ad[l]) * col[k];
      dst[k] = acc;
    }
  }
}

}  // namespace btc::lindblad
