#include "btc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "btc/error.hpp"

namespace btc::spectral {

namespace {

// Permutation that orders `values` by |Re| ascending. Conjugate partners come
// out of the solver with |Re| differing in the last bits, so each run of
// near-equal |Re| is re-ordered by Im.
std::vector<std::size_t> sorted_order(const std::vector<cplx>& values, double tie_tol) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = std::abs(values[a].real());
    const double rb = std::abs(values[b].real());
    if (ra != rb) return ra < rb;
    return values[a].imag() < values[b].imag();
  });
  std::size_t start = 0;
  while (start < order.size()) {
    const double base = std::abs(values[order[start]].real());
    std::size_t end = start + 1;
    while (end < order.size() && std::abs(values[order[end]].real()) - base <= tie_tol * std::max(1.0, base)) ++end;
    std::stable_sort(order.begin() + start, order.begin() + end,
                     [&](std::size_t a, std::size_t b) { return values[a].imag() < values[b].imag(); });
    start = end;
  }
  return order;
}

}  // namespace

void sort_eigenvalues(std::vector<cplx>& values, double tie_tol) {
  const auto order = sorted_order(values, tie_tol);
  std::vector<cplx> sorted;
  sorted.reserve(values.size());
  for (std::size_t idx : order) sorted.push_back(values[idx]);
  values = std::move(sorted);
}

EigenSpectrum full_spectrum(const lindblad::Superoperator& superop, bool want_vectors, int max_spins) {
  if (superop.params.n_spins > max_spins) {
    throw CapacityError("full spectrum requested for n_spins=" + std::to_string(superop.params.n_spins) +
                        ", above the dense-diagonalization cap of " + std::to_string(max_spins));
  }
  const lapack_int n = static_cast<lapack_int>(superop.rows());
  CMatrix a(superop.matrix);
  std::vector<cplx> w(n);
  CMatrix vr;
  if (want_vectors) vr.resize(n, n);

  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n, a.data(), n, w.data(), nullptr, 1,
      want_vectors ? vr.data() : nullptr, want_vectors ? n : 1);
  if (info > 0) {
    throw ConvergenceError("zgeev: QR iteration failed to compute all eigenvalues (info=" + std::to_string(info) +
                           "); eigenvalues " + std::to_string(info + 1) + ".." + std::to_string(n) +
                           " converged, dim=" + std::to_string(n));
  }
  if (info < 0) throw Error("zgeev: illegal argument " + std::to_string(-info));

  const std::vector<cplx>& values = w;

  EigenSpectrum spec{superop.params, {}, std::nullopt};
  const auto order = sorted_order(values, 1e-9);
  spec.eigenvalues.reserve(n);
  for (std::size_t idx : order) spec.eigenvalues.push_back(values[idx]);
  if (want_vectors) {
    CMatrix sorted_vr(n, n);
    for (std::size_t j = 0; j < order.size(); ++j) sorted_vr.col(j) = vr.col(order[j]);
    spec.right_vectors = std::move(sorted_vr);
  }
  return spec;
}

EigenSpectrum full_spectrum(const ModelParams& params, bool want_vectors, int max_spins) {
  if (params.n_spins > max_spins) {
    throw CapacityError("full spectrum requested for n_spins=" + std::to_string(params.n_spins) +
                        ", above the dense-diagonalization cap of " + std::to_string(max_spins));
  }
  return full_spectrum(lindblad::build_superoperator(params), want_vectors, max_spins);
}

std::vector<GapScanRow> gap_scan(const ModelParams& params_base, const std::vector<int>& sizes, int k,
                                 int max_spins) {
  std::vector<GapScanRow> rows(sizes.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    GapScanRow& row = rows[i];
    row.n_spins = sizes[i];
    try {
      ModelParams p = params_base;
      p.n_spins = sizes[i];
      const EigenSpectrum spec = full_spectrum(p, false, max_spins);
      for (int j = 1; j <= k && j < static_cast<int>(spec.size()); ++j) row.re_lambda.push_back(spec.eigenvalues[j].real());
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  return rows;
}

double excitation_nu(int j, int n_spins, NuFilter filter) {
  const double n = n_spins;
  return filter == NuFilter::Scaled ? j / (n * n) : static_cast<double>(j) * j / n;
}

std::vector<Band> cluster_bands(std::vector<double> imag_parts, const BandOptions& options) {
  std::vector<Band> bands;
  if (imag_parts.empty()) return bands;
  std::sort(imag_parts.begin(), imag_parts.end());
  double largest_gap = 0.0;
  for (std::size_t i = 1; i < imag_parts.size(); ++i) largest_gap = std::max(largest_gap, imag_parts[i] - imag_parts[i - 1]);
  const double threshold = std::max(options.split_fraction * largest_gap, options.min_split);

  bands.push_back({0.0, {imag_parts.front()}});
  for (std::size_t i = 1; i < imag_parts.size(); ++i) {
    if (imag_parts[i] - imag_parts[i - 1] > threshold) bands.push_back({0.0, {}});
    bands.back().members.push_back(imag_parts[i]);
  }
  for (Band& b : bands) {
    b.center = std::accumulate(b.members.begin(), b.members.end(), 0.0) / static_cast<double>(b.members.size());
  }
  return bands;
}

BandStructure band_structure(const EigenSpectrum& spec, double epsilon, const BandOptions& options) {
  if (!(epsilon > 0.0)) throw DomainError("band_structure: epsilon must be > 0");
  BandStructure out;
  out.nu_threshold = epsilon;
  std::vector<double> imag_parts;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    if (excitation_nu(static_cast<int>(j), spec.params.n_spins, options.filter) > epsilon) break;
    out.retained.emplace_back(static_cast<int>(j), spec.eigenvalues[j]);
    imag_parts.push_back(spec.eigenvalues[j].imag());
  }
  out.bands = cluster_bands(std::move(imag_parts), options);
  if (out.bands.size() >= 2) {
    out.gamma = (out.bands.back().center - out.bands.front().center) / static_cast<double>(out.bands.size() - 1);
  }
  return out;
}

std::optional<ImaginaryExcitation> lowest_imaginary_excitation(const EigenSpectrum& spec, double tol_im) {
  for (std::size_t j = 0; j < spec.size(); ++j) {
    if (std::abs(spec.eigenvalues[j].imag()) > tol_im) return ImaginaryExcitation{static_cast<int>(j), spec.eigenvalues[j]};
  }
  return std::nullopt;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw DomainError("fit_power_law needs at least 3 points");
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  std::vector<double> lx, ly;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("fit_power_law: all x and y must be positive");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
    sx += lx.back();
    sy += ly.back();
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_power_law: all x values are equal");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.amplitude = std::exp(my - fit.exponent * mx);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (my + fit.exponent * (lx[i] - mx));
    ss_res += r * r;
  }
  // Constant data is fit exactly by a zero exponent.
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.exponent_stderr = n > 2 ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
  return fit;
}

}  // namespace btc::spectral
