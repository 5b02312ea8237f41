#pragma once

#include <optional>
#include <string>
#include <vector>

#include "btc/dynamics.hpp"
#include "btc/spectral.hpp"

namespace btc::signal {

enum class Taper { None, Hann };

struct Periodogram {
  /// Angular frequencies omega_k = 2 pi k / (n dt), k = 0..n/2 (units of kappa).
  std::vector<double> frequencies;
  /// Power normalized so that the maximum is 1 (all zero for a constant signal).
  std::vector<double> power;
  /// One-sided power whose sum equals the variance of the (tapered,
  /// mean-removed) signal.
  std::vector<double> raw_power;
  double variance = 0.0;
  Taper taper = Taper::None;
  std::size_t n_samples = 0;
  double sample_dt = 0.0;
  double discarded_until = 0.0;

  /// Frequency of the largest power bin, excluding omega = 0.
  double peak_frequency() const;
};

/// Periodogram of uniformly sampled data. Throws DomainError with fewer than
/// 64 samples or non-uniform spacing.
Periodogram periodogram(const std::vector<double>& times, const std::vector<double>& values, double discard_until = 0.0,
                        Taper taper = Taper::None);

/// Periodogram of one trajectory observable, discarding samples with t < discard_transient.
/// A negative discard_transient means "first 10% of the window".
Periodogram periodogram(const dynamics::Trajectory& traj, const std::string& observable, double discard_transient = -1.0,
                        Taper taper = Taper::None);

struct DecayFit {
  double eta = 0.0;
  double frequency = 0.0;
  /// RMS residual of the log-envelope fit.
  double residual = 0.0;
  int n_peaks_used = 0;
};

struct DecayFitOptions {
  /// Extrema whose half peak-to-peak amplitude is below this are ignored.
  double noise_floor = 1e-8;
  int min_extrema = 5;
  /// Samples with t < discard_until are ignored.
  double discard_until = 0.0;
};

/// Envelope fit of a damped oscillation. Local extrema of the mean-removed
/// signal are located with parabolic refinement; the half peak-to-peak
/// amplitudes |x_{i+1} - x_i| / 2 (insensitive to a constant offset) are
/// fit as log A = c - eta t, and the frequency is pi over the mean extremum
/// spacing. Returns nullopt when fewer than `min_extrema` usable extrema exist.
std::optional<DecayFit> decay_rate_fit(const std::vector<double>& times, const std::vector<double>& values,
                                       const DecayFitOptions& options = {});

std::optional<DecayFit> decay_rate_fit(const dynamics::Trajectory& traj, const std::string& observable,
                                       const DecayFitOptions& options = {});

struct EtaRow {
  int n_spins = 0;
  std::optional<DecayFit> fit;
  /// |Re| of the lowest nonzero-Im Liouvillian eigenvalue, when the size is
  /// within the dense-spectrum cap.
  std::optional<double> re_lambda_ref;
  std::string error;
};

struct EtaScaling {
  /// eta ~ N^(-beta)
  double beta = 0.0;
  double beta_stderr = 0.0;
  double r_squared = 0.0;
  std::vector<EtaRow> table;
};

struct EtaScalingOptions {
  dynamics::EvolveOptions evolve{};
  std::string observable = "sz";
  double theta = 1.5707963267948966;
  double phi = 0.0;
  DecayFitOptions fit{};
  bool with_reference = true;
};

/// Fits beta from per-size (n, eta) pairs. Needs >= 3 pairs.
spectral::PowerLawFit fit_eta_power_law(const std::vector<std::pair<int, double>>& eta_by_size);

/// evolve + decay_rate_fit for every size (in parallel, output in input
/// order), then eta ~ N^(-beta). Unfittable sizes are flagged in the table
/// and left out of the fit.
EtaScaling eta_scaling(const ModelParams& params_base, const std::vector<int>& sizes,
                       const EtaScalingOptions& options = {});

}  // namespace btc::signal
