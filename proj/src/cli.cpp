#include "btc/cli.hpp"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "btc/csv.hpp"
#include "btc/dynamics.hpp"
#include "btc/error.hpp"
#include "btc/meanfield.hpp"
#include "btc/signal.hpp"
#include "btc/spectral.hpp"

namespace btc::cli {

using nlohmann::json;

namespace {

// Usage problems discovered after parsing (bad ranges, bad env vars).
struct UsageError : Error {
  using Error::Error;
};

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string complex_text(cplx z) {
  return csv::format_double(z.real()) + (z.imag() < 0 || std::signbit(z.imag()) ? "" : "+") +
         csv::format_double(z.imag()) + "i";
}

json config_json(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["units"] = "frequencies in units of kappa, times in units of 1/kappa";
  j["params"] = {{"n_spins", c.n_spins}, {"omega0", c.omega0}, {"kappa", c.kappa}, {"omega_x", c.omega_x},
                 {"omega_z", c.omega_z}};
  j["t_max"] = opt_json(c.t_max);
  j["dt"] = c.dt;
  j["stride"] = c.stride;
  j["initial"] = c.initial;
  j["theta"] = c.theta;
  j["phi"] = c.phi;
  j["epsilon_nu"] = c.epsilon_nu;
  j["nu_filter"] = c.nu_filter;
  j["sizes"] = c.sizes;
  j["k"] = c.k;
  j["scan_omega0"] = c.scan_omega0;
  j["m0"] = c.m0 ? json(*c.m0) : json(nullptr);
  j["integrator"] = c.integrator;
  j["ness_method"] = c.ness_method;
  j["observable"] = c.observable;
  j["grid"] = {c.n_q, c.n_p};
  j["trace_dt"] = c.trace_dt;
  j["trace_t_max"] = c.trace_t_max;
  j["transition"] = c.transition;
  j["out"] = c.out.string();
  return j;
}

void write_run_json(const RunConfig& c, const json& results) {
  json j = config_json(c);
  j["results"] = results;
  std::ofstream f(c.out / "run.json");
  if (!f) throw Error("cannot write " + (c.out / "run.json").string());
  f << j.dump(2) << '\n';
}

void prepare_out(const RunConfig& c) { std::filesystem::create_directories(c.out); }

spin::DensityMatrix initial_state(const RunConfig& c, const ModelParams& p) {
  if (c.initial == "mixed") return spin::maximally_mixed(p.sector());
  return spin::coherent_spin_state(p.sector(), c.theta, c.phi);
}

dynamics::EvolveOptions evolve_options(const RunConfig& c, double default_t_max) {
  dynamics::EvolveOptions o;
  o.t_max = c.t_max.value_or(default_t_max);
  o.dt = c.dt;
  o.stride = c.stride;
  return o;
}

void write_eta_scaling(const RunConfig& c, json& results) {
  signal::EtaScalingOptions o;
  o.evolve = evolve_options(c, 150.0);
  o.observable = c.observable;
  o.theta = c.theta;
  o.phi = c.phi;
  const auto scaling = signal::eta_scaling(c.params(), c.sizes, o);
  csv::Writer w(c.out / "eta_scaling.csv", {"n_spins", "eta", "re_lambda_ref", "frequency"});
  json rows = json::array();
  for (const auto& row : scaling.table) {
    w.row({row.n_spins, row.fit ? std::optional<double>(row.fit->eta) : std::nullopt, row.re_lambda_ref,
           row.fit ? std::optional<double>(row.fit->frequency) : std::nullopt});
    if (!row.error.empty()) rows.push_back({{"n_spins", row.n_spins}, {"error", row.error}});
  }
  results["eta_scaling"] = {{"beta", scaling.beta},
                            {"beta_stderr", scaling.beta_stderr},
                            {"r_squared", scaling.r_squared},
                            {"flagged", rows}};
}

void write_fixed_points(const RunConfig& c, const std::vector<meanfield::FixedPoint>& fixed) {
  csv::Writer w(c.out / "fixed_points.csv", {"mx", "my", "mz", "class", "jac_eigs"});
  for (const auto& fp : fixed) {
    w.row({fp.m[0], fp.m[1], fp.m[2], meanfield::to_string(fp.stability),
           complex_text(fp.jacobian_eigenvalues[0]) + ";" + complex_text(fp.jacobian_eigenvalues[1])});
  }
}

}  // namespace

ModelParams RunConfig::params() const {
  ModelParams p;
  p.n_spins = n_spins;
  p.omega0 = omega0;
  p.kappa = 1.0;
  p.omega_x = omega_x;
  p.omega_z = omega_z;
  return p;
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in range '" + text + "'");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw UsageError("range must be start:stop:step, got '" + text + "'");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0)) throw UsageError("range step must be > 0 in '" + text + "'");
  std::vector<double> out;
  for (long i = 0;; ++i) {
    const double v = start + static_cast<double>(i) * step;
    if (v >= stop + 0.5 * step) break;
    out.push_back(v);
    if (out.size() > 1'000'000) throw UsageError("range '" + text + "' is too long");
  }
  return out;
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> out;
  auto add = [&](double v) {
    if (v != std::round(v) || v < 1) throw UsageError("sizes must be positive integers, got '" + text + "'");
    out.push_back(static_cast<int>(v));
  };
  if (text.find(':') != std::string::npos) {
    for (double v : parse_range(text)) add(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto r = parse_range(item);
    add(r.front());
  }
  if (out.empty()) throw UsageError("empty size list");
  return out;
}

int cmd_spectrum(const RunConfig& c) {
  prepare_out(c);
  const auto spec = spectral::full_spectrum(c.params());
  {
    csv::Writer w(c.out / "spectrum.csv", {"j", "re_lambda", "im_lambda"});
    for (std::size_t j = 0; j < spec.size(); ++j) w.row({j, spec.eigenvalues[j].real(), spec.eigenvalues[j].imag()});
  }
  spectral::BandOptions bo;
  bo.filter = c.nu_filter == "quadratic" ? spectral::NuFilter::Quadratic : spectral::NuFilter::Scaled;
  const auto bands = spectral::band_structure(spec, c.epsilon_nu, bo);
  const auto low = spectral::lowest_imaginary_excitation(spec);
  {
    // A single cluster (everything at one frequency) is not a band structure.
    csv::Writer w(c.out / "bands.csv", {"band", "center", "n_members", "im_min", "im_max"});
    if (bands.bands.size() >= 2) {
      for (std::size_t b = 0; b < bands.bands.size(); ++b) {
        const auto& band = bands.bands[b];
        w.row({b, band.center, band.members.size(), band.members.front(), band.members.back()});
      }
    }
  }
  json results;
  results["n_eigenvalues"] = spec.size();
  results["lambda_0"] = {spec.eigenvalues[0].real(), spec.eigenvalues[0].imag()};
  results["n_retained"] = bands.retained.size();
  results["n_bands"] = bands.bands.size() >= 2 ? bands.bands.size() : 0;
  results["gamma"] = opt_json(bands.gamma);
  if (low) {
    results["lowest_imaginary"] = {{"j", low->j}, {"re", low->lambda.real()}, {"im", low->lambda.imag()}};
    if (bands.gamma) results["im_ratio_to_gamma"] = std::abs(low->lambda.imag()) / *bands.gamma;
  }
  write_run_json(c, results);
  return 0;
}

int cmd_gapscan(const RunConfig& c) {
  prepare_out(c);
  const auto sizes = c.sizes.empty() ? parse_sizes("12:36:1") : c.sizes;
  const auto rows = spectral::gap_scan(c.params(), sizes, c.k);
  csv::Writer w(c.out / "gapscan.csv", {"n_spins", "j", "re_lambda"});
  json errors = json::array();
  std::vector<std::pair<double, double>> gap;
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.re_lambda.size(); ++j) w.row({row.n_spins, j + 1, row.re_lambda[j]});
    if (!row.error.empty()) errors.push_back({{"n_spins", row.n_spins}, {"error", row.error}});
    if (!row.re_lambda.empty() && row.re_lambda[0] < 0.0) gap.emplace_back(row.n_spins, -row.re_lambda[0]);
  }
  json results;
  results["failed_sizes"] = errors;
  if (gap.size() >= 3) {
    const auto fit = spectral::fit_power_law(gap);
    results["gap_fit"] = {{"exponent", fit.exponent}, {"exponent_stderr", fit.exponent_stderr},
                          {"r_squared", fit.r_squared}, {"amplitude", fit.amplitude}};
  }
  write_run_json(c, results);
  return errors.empty() ? 0 : 1;
}

int cmd_evolve(const RunConfig& c) {
  prepare_out(c);
  const auto p = c.params();
  const auto traj = dynamics::evolve(p, initial_state(c, p), evolve_options(c, 50.0));
  {
    csv::Writer w(c.out / "trajectory.csv",
                  {"t", "sx", "sy", "sz", "var_x", "var_y", "var_z", "trace", "purity"});
    for (const auto& r : traj.records) w.row({r.t, r.sx, r.sy, r.sz, r.var_x, r.var_y, r.var_z, r.trace, r.purity});
  }
  json results;
  results["max_trace_drift"] = traj.max_trace_drift;
  results["max_hermiticity_error"] = traj.max_hermiticity_error;
  {
    csv::Writer w(c.out / "fourier.csv", {"omega", "power"});
    try {
      const auto pg = signal::periodogram(traj, c.observable);
      for (std::size_t k = 0; k < pg.frequencies.size(); ++k) w.row({pg.frequencies[k], pg.power[k]});
      results["peak_frequency"] = pg.peak_frequency();
    } catch (const DomainError& e) {
      results["fourier_error"] = e.what();
    }
  }
  {
    csv::Writer w(c.out / "decay.csv", {"n_spins", "eta", "frequency", "residual", "n_extrema"});
    const auto fit = signal::decay_rate_fit(traj, c.observable);
    if (fit) {
      w.row({c.n_spins, fit->eta, fit->frequency, fit->residual, fit->n_peaks_used});
    } else {
      w.row({c.n_spins, std::optional<double>(), std::optional<double>(), std::optional<double>(), 0});
      results["decay_error"] = "unfittable: too few extrema above the noise floor";
    }
  }
  if (!c.sizes.empty()) write_eta_scaling(c, results);
  write_run_json(c, results);
  return 0;
}

int cmd_scaling(const RunConfig& c) {
  prepare_out(c);
  RunConfig cfg = c;
  if (cfg.sizes.empty()) cfg.sizes = parse_sizes("16:36:2");
  json results;
  write_eta_scaling(cfg, results);
  write_run_json(cfg, results);
  return 0;
}

int cmd_ness(const RunConfig& c) {
  prepare_out(c);
  const auto scan = c.scan_omega0.empty() ? std::vector<double>{c.omega0} : c.scan_omega0;
  dynamics::NessOptions o;
  o.method = c.ness_method == "inverse" ? dynamics::NessMethod::InverseIteration : dynamics::NessMethod::SparseLU;
  csv::Writer w(c.out / "ness.csv", {"omega0_over_kappa", "sx", "sy", "sz", "var_x", "var_y", "var_z"});
  json residuals = json::array();
  for (double w0 : scan) {
    ModelParams p = c.params();
    p.omega0 = w0;
    const auto ness = dynamics::steady_state(p, o);
    const auto r = dynamics::measure(ness.rho);
    w.row({w0, r.sx, r.sy, r.sz, r.var_x, r.var_y, r.var_z});
    residuals.push_back({{"omega0", w0}, {"residual", ness.residual}, {"solves", ness.iterations}});
  }
  write_run_json(c, {{"ness", residuals}});
  return 0;
}

int cmd_meanfield(const RunConfig& c) {
  prepare_out(c);
  const auto p = c.params();
  meanfield::Vec3 m0 = meanfield::bloch_vector(c.theta, c.phi);
  if (c.m0) {
    const auto& v = *c.m0;
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (!(n > 0.0)) throw UsageError("--m0 must be a nonzero vector");
    m0 = {v[0] / n, v[1] / n, v[2] / n};
  }
  meanfield::MfOptions o;
  o.t_max = c.t_max.value_or(100.0);
  o.dt = c.dt;
  o.integrator = c.integrator == "rk4" ? meanfield::Integrator::RK4 : meanfield::Integrator::Adaptive;
  const auto traj = meanfield::mf_integrate(m0, p, o);
  double max_reality = 0.0;
  {
    csv::Writer w(c.out / "meanfield.csv", {"t", "mx", "my", "mz", "norm", "M", "R", "branch_n"});
    for (const auto& r : traj.records) {
      w.row({r.t, r.m[0], r.m[1], r.m[2], r.norm, r.M, r.R, r.branch_n});
      max_reality = std::max(max_reality, r.reality_residual);
    }
  }
  const auto fixed = meanfield::fixed_points(p);
  write_fixed_points(c, fixed);
  const auto inv = meanfield::involution_check(traj);
  json results;
  results["m0"] = m0;
  results["max_norm_drift"] = traj.max_norm_drift;
  results["max_reality_residual"] = max_reality;
  results["involution"] = {{"passed", inv.passed}, {"mismatch", inv.mismatch}};
  write_run_json(c, results);
  return 0;
}

int cmd_portrait(const RunConfig& c) {
  prepare_out(c);
  const auto p = c.params();
  meanfield::PortraitOptions o;
  o.n_q = c.n_q;
  o.n_p = c.n_p;
  if (c.t_max) o.orbit.t_max = *c.t_max;
  o.trace_dt = c.trace_dt;
  o.trace_t_max = c.trace_t_max;
  const auto portrait = meanfield::phase_portrait(p, o);
  {
    csv::Writer w(c.out / "portrait.csv", {"seed_q", "seed_p", "class", "period_estimate"});
    for (const auto& s : portrait.seeds) w.row({s.q, s.p, meanfield::to_string(s.result.cls), s.result.period});
  }
  if (c.trace_dt > 0.0) {
    csv::Writer w(c.out / "portrait_traces.csv", {"seed", "t", "q", "p"});
    for (std::size_t i = 0; i < portrait.seeds.size(); ++i) {
      const auto& trace = portrait.seeds[i].trace;
      for (std::size_t k = 0; k < trace.size(); ++k) {
        w.row({i, static_cast<double>(k) * c.trace_dt, trace[k].first, trace[k].second});
      }
    }
  }
  write_fixed_points(c, portrait.fixed);
  json results;
  json fractions;
  for (auto cls : {meanfield::OrbitClass::Closed, meanfield::OrbitClass::Attracted, meanfield::OrbitClass::Escaped,
                   meanfield::OrbitClass::Fixed, meanfield::OrbitClass::Failed}) {
    fractions[meanfield::to_string(cls)] = portrait.fraction(cls);
  }
  results["fractions"] = fractions;
  if (c.transition) {
    const auto t = meanfield::locate_transition(p, 0.0, std::max(c.omega0, 1.0), 1e-4);
    results["transition"] = {{"omega_z", t.omega_z}, {"lower", t.lower}, {"upper", t.upper},
                             {"analytic", opt_json(meanfield::analytic_transition(p))}};
  }
  write_run_json(c, results);
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Boundary time crystal toolkit"};
  app.require_subcommand(1);
  RunConfig c;
  std::string sizes_text, scan_text, m0_text;
  double t_max = -1.0;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--n-spins", c.n_spins, "Number of spins N (S = N/2)")->check(CLI::PositiveNumber);
    sub->add_option("--omega0", c.omega0, "Drive frequency / kappa");
    sub->add_option("--kappa", c.kappa, "Dissipation rate (the unit of frequency)")->check(CLI::PositiveNumber);
    sub->add_option("--omega-x", c.omega_x, "Sx^2 coupling / kappa");
    sub->add_option("--omega-z", c.omega_z, "Sz^2 coupling / kappa");
    sub->add_option("--out", c.out, "Output directory");
  };
  auto add_time = [&](CLI::App* sub) {
    sub->add_option("--t-max", t_max, "Final time (1/kappa)")->check(CLI::NonNegativeNumber);
    sub->add_option("--dt", c.dt, "Time step (1/kappa)")->check(CLI::PositiveNumber);
  };
  auto add_initial = [&](CLI::App* sub) {
    sub->add_option("--theta", c.theta, "Coherent-state polar angle");
    sub->add_option("--phi", c.phi, "Coherent-state azimuth");
  };
  auto add_evolve = [&](CLI::App* sub) {
    add_time(sub);
    add_initial(sub);
    sub->add_option("--stride", c.stride, "Record every this many steps")->check(CLI::PositiveNumber);
    sub->add_option("--initial", c.initial, "Initial state")->check(CLI::IsMember({"coherent", "mixed"}));
    sub->add_option("--observable", c.observable, "Observable for Fourier and decay analysis")
        ->check(CLI::IsMember({"sx", "sy", "sz"}));
    sub->add_option("--sizes", sizes_text, "Sizes for the eta scaling sweep");
  };

  auto* spectrum = app.add_subcommand("spectrum", "Full Liouvillian spectrum and band structure");
  add_model(spectrum);
  spectrum->add_option("--epsilon-nu", c.epsilon_nu, "Band filter threshold")->check(CLI::PositiveNumber);
  spectrum->add_option("--nu-filter", c.nu_filter, "nu = j/N^2 (scaled) or j^2/N (quadratic)")
      ->check(CLI::IsMember({"scaled", "quadratic"}));

  auto* gapscan = app.add_subcommand("gapscan", "Leading real parts over a range of sizes");
  add_model(gapscan);
  gapscan->add_option("--sizes", sizes_text, "Sizes, e.g. 12:36:1 or 12,16,20");
  gapscan->add_option("--k", c.k, "Eigenvalues per size")->check(CLI::PositiveNumber);

  auto* evolve = app.add_subcommand("evolve", "Time evolution, periodogram and decay fit");
  add_model(evolve);
  add_evolve(evolve);

  auto* scaling = app.add_subcommand("scaling", "Decay rate eta versus N");
  add_model(scaling);
  add_evolve(scaling);

  auto* ness = app.add_subcommand("ness", "Steady state observables");
  add_model(ness);
  ness->add_option("--scan-omega0", scan_text, "omega0 values, start:stop:step");
  ness->add_option("--method", c.ness_method, "Solver")->check(CLI::IsMember({"lu", "inverse"}));

  auto* mf = app.add_subcommand("meanfield", "Mean-field trajectory and conserved quantities");
  add_model(mf);
  add_time(mf);
  add_initial(mf);
  mf->add_option("--m0", m0_text, "Initial magnetization mx,my,mz (normalized)");
  mf->add_option("--integrator", c.integrator, "Integrator")->check(CLI::IsMember({"adaptive", "rk4"}));

  auto* portrait = app.add_subcommand("portrait", "Mean-field phase portrait in (Q, P)");
  add_model(portrait);
  portrait->add_option("--t-max", t_max, "Per-seed integration limit (1/kappa)")->check(CLI::PositiveNumber);
  portrait->add_option("--n-q", c.n_q, "Seeds along Q")->check(CLI::Range(2, 10000));
  portrait->add_option("--n-p", c.n_p, "Seeds along P")->check(CLI::Range(2, 10000));
  portrait->add_option("--trace-dt", c.trace_dt, "Trace sampling interval (0 disables traces)");
  portrait->add_option("--trace-t-max", c.trace_t_max, "Trace length")->check(CLI::PositiveNumber);
  portrait->add_flag("--transition", c.transition, "Bisect omega_z for the onset of attracted orbits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (const char* env = std::getenv("BTC_THREADS")) {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || n < 1) throw UsageError(std::string("BTC_THREADS must be a positive integer, got '") + env + "'");
      omp_set_num_threads(static_cast<int>(n));
    }
    if (t_max >= 0.0) c.t_max = t_max;
    if (!sizes_text.empty()) c.sizes = parse_sizes(sizes_text);
    if (!scan_text.empty()) c.scan_omega0 = parse_range(scan_text);
    if (!m0_text.empty()) {
      std::array<double, 3> v{};
      std::stringstream ss(m0_text);
      std::string item;
      int i = 0;
      while (std::getline(ss, item, ',')) {
        if (i >= 3) throw UsageError("--m0 takes exactly three components");
        v[i++] = parse_range(item).front();
      }
      if (i != 3) throw UsageError("--m0 takes exactly three components");
      c.m0 = v;
    }
    c.subcommand = app.get_subcommands().front()->get_name();
    if (!c.t_max) {
      if (c.subcommand == "evolve") c.t_max = 50.0;
      else if (c.subcommand == "scaling") c.t_max = 150.0;
      else if (c.subcommand == "meanfield") c.t_max = 100.0;
      else if (c.subcommand == "portrait") c.t_max = meanfield::OrbitOptions{}.t_max;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (c.subcommand == "spectrum") return cmd_spectrum(c);
    if (c.subcommand == "gapscan") return cmd_gapscan(c);
    if (c.subcommand == "evolve") return cmd_evolve(c);
    if (c.subcommand == "scaling") return cmd_scaling(c);
    if (c.subcommand == "ness") return cmd_ness(c);
    if (c.subcommand == "meanfield") return cmd_meanfield(c);
    if (c.subcommand == "portrait") return cmd_portrait(c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << c.subcommand << ": " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace btc::cli
