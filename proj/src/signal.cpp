#include "btc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fftw3.h>

#include "btc/error.hpp"

namespace btc::signal {

double Periodogram::peak_frequency() const {
  std::size_t best = 0;
  double best_power = -1.0;
  for (std::size_t k = 1; k < raw_power.size(); ++k) {
    if (raw_power[k] > best_power) {
      best_power = raw_power[k];
      best = k;
    }
  }
  return best < frequencies.size() ? frequencies[best] : 0.0;
}

Periodogram periodogram(const std::vector<double>& times, const std::vector<double>& values, double discard_until,
                        Taper taper) {
  if (times.size() != values.size()) throw DimensionError("periodogram: times and values differ in length");
  std::vector<double> x;
  double t0 = 0.0, t_last = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < discard_until) continue;
    if (x.empty()) t0 = times[i];
    t_last = times[i];
    x.push_back(values[i]);
  }
  const std::size_t n = x.size();
  if (n < 64) throw DomainError("periodogram: need at least 64 samples after transient discard, got " + std::to_string(n));
  const double dt = (t_last - t0) / static_cast<double>(n - 1);
  // Uniform grid check on the retained samples.
  std::size_t idx = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < discard_until) continue;
    const double expected = t0 + dt * static_cast<double>(idx++);
    if (std::abs(times[i] - expected) > 1e-6 * dt + 1e-12 * std::abs(expected)) {
      throw DomainError("periodogram: samples are not uniformly spaced");
    }
  }

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : x) v -= mean;
  if (taper == Taper::Hann) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1)));
    }
  }

  const std::size_t n_out = n / 2 + 1;
  std::vector<double> in = x;
  fftw_complex* out = fftw_alloc_complex(n_out);
  fftw_plan plan;
  // Only fftw_execute is thread-safe.
#pragma omp critical(btc_fftw_planner)
  plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out, FFTW_ESTIMATE);
  fftw_execute(plan);

  Periodogram pg;
  pg.taper = taper;
  pg.n_samples = n;
  pg.sample_dt = dt;
  pg.discarded_until = discard_until;
  pg.frequencies.resize(n_out);
  pg.raw_power.resize(n_out);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t k = 0; k < n_out; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const bool unpaired = (k == 0) || (n % 2 == 0 && k == n / 2);
    pg.raw_power[k] = (unpaired ? 1.0 : 2.0) * mag2 * norm;
    pg.frequencies[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * dt);
  }
#pragma omp critical(btc_fftw_planner)
  fftw_destroy_plan(plan);
  fftw_free(out);

  for (double v : x) pg.variance += v * v;
  pg.variance /= static_cast<double>(n);
  const double max_power = *std::max_element(pg.raw_power.begin(), pg.raw_power.end());
  pg.power.resize(n_out, 0.0);
  if (max_power > 0.0) {
    for (std::size_t k = 0; k < n_out; ++k) pg.power[k] = pg.raw_power[k] / max_power;
  }
  return pg;
}

Periodogram periodogram(const dynamics::Trajectory& traj, const std::string& observable, double discard_transient,
                        Taper taper) {
  const auto t = traj.times();
  if (t.empty()) throw DomainError("periodogram: empty trajectory");
  if (discard_transient < 0.0) discard_transient = t.front() + 0.1 * (t.back() - t.front());
  return periodogram(t, traj.column(observable), discard_transient, taper);
}

namespace {

struct Extremum {
  double t;
  double value;
  bool is_max;
};

std::vector<Extremum> find_extrema(const std::vector<double>& t, const std::vector<double>& x) {
  std::vector<Extremum> out;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const bool is_max = x[i] > x[i - 1] && x[i] >= x[i + 1];
    const bool is_min = x[i] < x[i - 1] && x[i] <= x[i + 1];
    if (!is_max && !is_min) continue;
    const double y0 = x[i - 1], y1 = x[i], y2 = x[i + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    double delta = denom != 0.0 ? 0.5 * (y0 - y2) / denom : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    const double h = 0.5 * (t[i + 1] - t[i - 1]);
    Extremum e{t[i] + delta * h, y1 - 0.25 * (y0 - y2) * delta, is_max};
    // Keep maxima and minima alternating; of two same-kind neighbours keep
    // the more extreme one.
    if (!out.empty() && out.back().is_max == e.is_max) {
      const bool replace = e.is_max ? e.value > out.back().value : e.value < out.back().value;
      if (replace) out.back() = e;
      continue;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace

std::optional<DecayFit> decay_rate_fit(const std::vector<double>& times, const std::vector<double>& values,
                                       const DecayFitOptions& options) {
  if (times.size() != values.size()) throw DimensionError("decay_rate_fit: times and values differ in length");
  std::vector<double> t, x;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < options.discard_until) continue;
    t.push_back(times[i]);
    x.push_back(values[i]);
  }
  if (x.size() < 3) return std::nullopt;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : x) v -= mean;

  const auto extrema = find_extrema(t, x);
  std::vector<double> amp_t, log_amp;
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < extrema.size(); ++i) {
    const double amp = 0.5 * std::abs(extrema[i + 1].value - extrema[i].value);
    if (amp < options.noise_floor) break;
    amp_t.push_back(0.5 * (extrema[i].t + extrema[i + 1].t));
    log_amp.push_back(std::log(amp));
    used = i + 2;
  }
  if (static_cast<int>(used) < options.min_extrema || amp_t.size() < 2) return std::nullopt;

  const double n = static_cast<double>(amp_t.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < amp_t.size(); ++i) {
    mt += amp_t[i];
    ml += log_amp[i];
  }
  mt /= n;
  ml /= n;
  double stt = 0.0, stl = 0.0;
  for (std::size_t i = 0; i < amp_t.size(); ++i) {
    stt += (amp_t[i] - mt) * (amp_t[i] - mt);
    stl += (amp_t[i] - mt) * (log_amp[i] - ml);
  }
  const double slope = stl / stt;
  double ss = 0.0;
  for (std::size_t i = 0; i < amp_t.size(); ++i) {
    const double r = log_amp[i] - (ml + slope * (amp_t[i] - mt));
    ss += r * r;
  }

  DecayFit fit;
  fit.eta = std::max(0.0, -slope);
  fit.residual = std::sqrt(ss / n);
  fit.n_peaks_used = static_cast<int>(used);
  const double span = extrema[used - 1].t - extrema[0].t;
  fit.frequency = std::numbers::pi * static_cast<double>(used - 1) / span;
  return fit;
}

std::optional<DecayFit> decay_rate_fit(const dynamics::Trajectory& traj, const std::string& observable,
                                       const DecayFitOptions& options) {
  return decay_rate_fit(traj.times(), traj.column(observable), options);
}

spectral::PowerLawFit fit_eta_power_law(const std::vector<std::pair<int, double>>& eta_by_size) {
  std::vector<std::pair<double, double>> points;
  for (const auto& [n, eta] : eta_by_size) points.emplace_back(static_cast<double>(n), eta);
  return spectral::fit_power_law(points);
}

EtaScaling eta_scaling(const ModelParams& params_base, const std::vector<int>& sizes, const EtaScalingOptions& options) {
  if (sizes.size() < 3) throw DomainError("eta_scaling needs at least 3 sizes");
  EtaScaling out;
  out.table.resize(sizes.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    EtaRow& row = out.table[i];
    row.n_spins = sizes[i];
    try {
      ModelParams p = params_base;
      p.n_spins = sizes[i];
      const auto rho0 = spin::coherent_spin_state(p.sector(), options.theta, options.phi);
      const auto traj = dynamics::evolve(p, rho0, options.evolve);
      row.fit = decay_rate_fit(traj, options.observable, options.fit);
      if (options.with_reference && p.n_spins <= spectral::kDefaultMaxSpins) {
        const auto spec = spectral::full_spectrum(p);
        if (const auto low = spectral::lowest_imaginary_excitation(spec)) row.re_lambda_ref = std::abs(low->lambda.real());
      }
      if (!row.fit) row.error = "unfittable: too few extrema above the noise floor";
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  std::vector<std::pair<int, double>> pairs;
  for (const auto& row : out.table) {
    if (row.fit && row.fit->eta > 0.0) pairs.emplace_back(row.n_spins, row.fit->eta);
  }
  if (pairs.size() < 3) throw ConvergenceError("eta_scaling: fewer than 3 sizes produced a decay fit");
  const auto fit = fit_eta_power_law(pairs);
  out.beta = -fit.exponent;
  out.beta_stderr = fit.exponent_stderr;
  out.r_squared = fit.r_squared;
  return out;
}

}  // namespace btc::signal
