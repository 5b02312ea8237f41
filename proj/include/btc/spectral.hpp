#pragma once

#include <optional>
#include <string>
#include <vector>

#include "btc/liouvillian.hpp"

namespace btc::spectral {

/// Largest n_spins accepted by full_spectrum (dim^2 = 1681 at 40).
inline constexpr int kDefaultMaxSpins = 40;
/// |Im lambda| above this counts as a nonzero imaginary part (units of kappa).
inline constexpr double kDefaultTolIm = 1e-6;

struct EigenSpectrum {
  ModelParams params;
  /// Sorted so that |Re l_j| <= |Re l_{j+1}|; near-equal |Re| ordered by Im ascending.
  std::vector<cplx> eigenvalues;
  /// Right eigenvectors as columns, in the same order, when requested.
  std::optional<CMatrix> right_vectors;

  std::size_t size() const { return eigenvalues.size(); }
};

/// Sorts in place with the ordering documented on EigenSpectrum. Values whose
/// |Re| agree within `tie_tol` are treated as ties and ordered by Im.
void sort_eigenvalues(std::vector<cplx>& values, double tie_tol = 1e-9);

/// Dense diagonalization of the materialized Liouvillian (LAPACK zgeev:
/// Hessenberg reduction followed by shifted QR).
EigenSpectrum full_spectrum(const lindblad::Superoperator& superop, bool want_vectors = false,
                            int max_spins = kDefaultMaxSpins);

/// Convenience: build + diagonalize.
EigenSpectrum full_spectrum(const ModelParams& params, bool want_vectors = false,
                            int max_spins = kDefaultMaxSpins);

struct GapScanRow {
  int n_spins = 0;
  /// Re lambda_j for j = 1..k (lambda_0 excluded).
  std::vector<double> re_lambda;
  /// Non-empty when the diagonalization for this size failed.
  std::string error;
};

/// Leading real parts for each size. Sizes run in parallel; output order
/// follows `sizes`. Failures are recorded per row and the scan continues.
std::vector<GapScanRow> gap_scan(const ModelParams& params_base, const std::vector<int>& sizes, int k = 5,
                                 int max_spins = kDefaultMaxSpins);

struct Band {
  double center = 0.0;
  std::vector<double> members;
};

struct BandStructure {
  double nu_threshold = 0.0;
  /// (j, lambda_j) with nu(j) <= epsilon.
  std::vector<std::pair<int, cplx>> retained;
  std::vector<Band> bands;
  /// Mean spacing of adjacent band centers; empty with fewer than two bands.
  std::optional<double> gamma;
};

/// Excitation index filter. Scaled is nu = j / N^2; Quadratic is nu = j^2 / N,
/// which at N = 36 and epsilon = 0.025 keeps only the stationary state.
enum class NuFilter { Scaled, Quadratic };

struct BandOptions {
  NuFilter filter = NuFilter::Scaled;
  /// Split where an adjacent Im gap exceeds this fraction of the largest gap.
  double split_fraction = 0.5;
  /// Gaps at or below this never split a band (units of kappa).
  double min_split = 0.1;
};

double excitation_nu(int j, int n_spins, NuFilter filter = NuFilter::Scaled);

BandStructure band_structure(const EigenSpectrum& spec, double epsilon = 0.025, const BandOptions& options = {});

/// Clustering step of band_structure, exposed for direct use.
std::vector<Band> cluster_bands(std::vector<double> imag_parts, const BandOptions& options = {});

struct ImaginaryExcitation {
  int j = 0;
  cplx lambda;
};

/// First lambda_j (smallest j) with |Im lambda_j| > tol_im.
std::optional<ImaginaryExcitation> lowest_imaginary_excitation(const EigenSpectrum& spec,
                                                               double tol_im = kDefaultTolIm);

struct PowerLawFit {
  double amplitude = 0.0;
  double exponent = 0.0;
  double r_squared = 0.0;
  /// Standard error of the exponent from the log-log regression.
  double exponent_stderr = 0.0;
};

/// Least squares of log y = log A + p log x. Needs >= 3 points, all positive.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

}  // namespace btc::spectral
