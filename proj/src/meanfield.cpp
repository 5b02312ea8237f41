#include "btc/meanfield.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "btc/error.hpp"

namespace btc::meanfield {

namespace odeint = boost::numeric::odeint;

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm2(const Vec3& a) { return dot(a, a); }
double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}
Vec3 normalized(const Vec3& a) {
  const double n = std::sqrt(norm2(a));
  return {a[0] / n, a[1] / n, a[2] / n};
}

// Orthonormal basis of the plane orthogonal to m.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& m) {
  const Vec3 u = normalized(m);
  Vec3 a = std::abs(u[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const double p = dot(a, u);
  a = normalized({a[0] - p * u[0], a[1] - p * u[1], a[2] - p * u[2]});
  const Vec3 b{u[1] * a[2] - u[2] * a[1], u[2] * a[0] - u[0] * a[2], u[0] * a[1] - u[1] * a[0]};
  return {a, b};
}

struct Field {
  const ModelParams& params;
  void operator()(const Vec3& x, Vec3& dx, double) const { dx = mf_derivative(x, params); }
};

}  // namespace

Vec3 bloch_vector(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Vec3 mf_derivative(const Vec3& m, const ModelParams& p) {
  const double mx = m[0], my = m[1], mz = m[2];
  return {-2.0 * p.omega_z * my * mz + p.kappa * mx * mz,
          2.0 * (p.omega_z - p.omega_x) * mx * mz - p.omega0 * mz + p.kappa * my * mz,
          p.omega0 * my - p.kappa * (mx * mx + my * my) + 2.0 * p.omega_x * mx * my};
}

std::array<std::array<double, 3>, 3> mf_jacobian(const Vec3& m, const ModelParams& p) {
  const double mx = m[0], my = m[1], mz = m[2];
  const double wzx = 2.0 * (p.omega_z - p.omega_x);
  return {{{p.kappa * mz, -2.0 * p.omega_z * mz, -2.0 * p.omega_z * my + p.kappa * mx},
           {wzx * mz, p.kappa * mz, wzx * mx - p.omega0 + p.kappa * my},
           {-2.0 * p.kappa * mx + 2.0 * p.omega_x * my, p.omega0 - 2.0 * p.kappa * my + 2.0 * p.omega_x * mx, 0.0}}};
}

std::optional<double> conserved_M(const Vec3& m, const ModelParams& params) {
  if (params.omega_x != 0.0 || params.omega_z != 0.0) throw DomainError("conserved_M requires omega_x = omega_z = 0");
  if (!(params.kappa > 0.0)) throw DomainError("conserved_M requires kappa > 0");
  const double denom = m[1] - params.omega0 / params.kappa;
  if (std::abs(denom) <= 1e-12) return std::nullopt;
  return m[0] / denom;
}

bool has_conserved_R(const ModelParams& p) {
  return (p.omega_z > 0.0 && p.omega_z > p.omega_x) || (p.omega_z == 0.0 && p.omega_x == 0.0);
}

ConservedR conserved_R(const Vec3& m, const ModelParams& p, const BranchState& state) {
  if (!has_conserved_R(p)) {
    std::ostringstream msg;
    msg << "conserved_R: closed form needs omega_z > omega_x (got omega_z=" << p.omega_z << ", omega_x=" << p.omega_x
        << "); lambda_+- are real in this regime";
    throw DomainError(msg.str());
  }
  const double g = std::sqrt(p.omega_z * (p.omega_z - p.omega_x));
  const double r = p.omega_z > 0.0 ? std::sqrt(1.0 - p.omega_x / p.omega_z) : 1.0;
  const cplx lp(p.kappa, 2.0 * g);
  const cplx lm = std::conj(lp);
  const cplx z = lp * cplx(m[1], -r * m[0]) - p.omega0;

  ConservedR out;
  const cplx bracket = lm * std::log(z) - lp * std::log(std::conj(z));
  out.reality_residual = std::abs(bracket.real());
  out.branch_value = z.real();
  const double two_pi_kappa = 2.0 * std::numbers::pi * p.kappa;
  const double raw = 2.0 * g * std::log(std::norm(z)) - 2.0 * p.kappa * std::atan(z.imag() / z.real());

  out.state = state;
  if (state.initialized && (out.branch_value < 0.0) != (state.last_branch_value < 0.0) && two_pi_kappa > 0.0) {
    const double shift = (state.last_R - (raw + two_pi_kappa * state.n)) / two_pi_kappa;
    out.state.n += static_cast<int>(std::lround(shift));
  }
  out.R = raw + two_pi_kappa * out.state.n;
  out.state.initialized = true;
  out.state.last_branch_value = out.branch_value;
  out.state.last_R = out.R;
  return out;
}

MfTrajectory mf_integrate(const Vec3& m0, const ModelParams& params, const MfOptions& options) {
  if (std::abs(std::sqrt(norm2(m0)) - 1.0) > 1e-12) throw DomainError("mf_integrate: |m0| must be 1 within 1e-12");
  if (!(options.dt > 0.0)) throw DomainError("mf_integrate: dt must be > 0");
  if (!(options.t_max >= 0.0)) throw DomainError("mf_integrate: t_max must be >= 0");

  MfTrajectory traj{params, {}, 0.0};
  const bool with_M = params.omega_x == 0.0 && params.omega_z == 0.0 && params.kappa > 0.0;
  const bool with_R = has_conserved_R(params);
  BranchState branch;

  auto observe = [&](const Vec3& m, double t) {
    ConservedRecord rec;
    rec.t = t;
    rec.m = m;
    rec.norm = norm2(m);
    const double drift = std::abs(rec.norm - 1.0);
    traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
    if (drift > options.norm_abort) {
      std::ostringstream msg;
      msg << "mf_integrate: norm drift " << drift << " at t=" << t << " exceeds " << options.norm_abort
          << "; reduce the step or tolerance";
      throw ConvergenceError(msg.str());
    }
    if (with_M) rec.M = conserved_M(m, params);
    if (with_R) {
      const auto r = conserved_R(m, params, branch);
      if (std::isfinite(r.R)) {
        branch = r.state;
        rec.R = r.R;
        rec.reality_residual = r.reality_residual;
      }
      rec.branch_n = branch.n;
    }
    traj.records.push_back(rec);
  };

  const long steps = std::lround(std::ceil(options.t_max / options.dt - 1e-9));
  Vec3 m = m0;
  const Field field{params};
  if (options.integrator == Integrator::RK4) {
    odeint::runge_kutta4<Vec3> stepper;
    observe(m, 0.0);
    for (long i = 1; i <= steps; ++i) {
      stepper.do_step(field, m, (i - 1) * options.dt, options.dt);
      observe(m, i * options.dt);
    }
  } else {
    auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<Vec3>());
    odeint::integrate_n_steps(stepper, field, m, 0.0, options.dt, static_cast<std::size_t>(steps), observe);
  }
  return traj;
}

Vec3 mf_propagate(const Vec3& m0, const ModelParams& params, double t, double tol) {
  Vec3 m = m0;
  if (t == 0.0) return m;
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<Vec3>());
  odeint::integrate_adaptive(stepper, Field{params}, m, 0.0, t, std::min(0.01, t));
  return m;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::CenterLike: return "center-like";
    case Stability::Attracting: return "attracting";
    case Stability::Repelling: return "repelling";
    case Stability::Saddle: return "saddle";
  }
  return "unknown";
}

std::array<cplx, 2> tangent_eigenvalues(const Vec3& m, const ModelParams& params) {
  const auto j = mf_jacobian(m, params);
  const auto [e1, e2] = tangent_basis(m);
  auto apply = [&](const Vec3& v) {
    return Vec3{dot(j[0], v), dot(j[1], v), dot(j[2], v)};
  };
  const Vec3 je1 = apply(e1), je2 = apply(e2);
  const double a = dot(e1, je1), b = dot(e1, je2), c = dot(e2, je1), d = dot(e2, je2);
  const double tr = a + d, det = a * d - b * c;
  const cplx disc = std::sqrt(cplx(tr * tr / 4.0 - det));
  return {tr / 2.0 - disc, tr / 2.0 + disc};
}

Stability classify(const std::array<cplx, 2>& ev, double tol) {
  const double r0 = ev[0].real(), r1 = ev[1].real();
  const double scale = tol * std::max({1.0, std::abs(ev[0]), std::abs(ev[1])});
  const bool neg0 = r0 < -scale, neg1 = r1 < -scale, pos0 = r0 > scale, pos1 = r1 > scale;
  if (neg0 && neg1) return Stability::Attracting;
  if (pos0 && pos1) return Stability::Repelling;
  if ((neg0 && pos1) || (pos0 && neg1)) return Stability::Saddle;
  return Stability::CenterLike;
}

std::optional<Vec3> newton_fixed_point(const Vec3& seed, const ModelParams& params, double tol, int max_iterations) {
  Eigen::Vector3d m(seed[0], seed[1], seed[2]);
  for (int it = 0; it < max_iterations; ++it) {
    const Vec3 mv{m[0], m[1], m[2]};
    const Vec3 f = mf_derivative(mv, params);
    Eigen::Vector4d res(f[0], f[1], f[2], m.squaredNorm() - 1.0);
    if (res.lpNorm<Eigen::Infinity>() <= tol) return mv;
    const auto j = mf_jacobian(mv, params);
    Eigen::Matrix<double, 4, 3> jac;
    for (int r = 0; r < 3; ++r) jac.row(r) << j[r][0], j[r][1], j[r][2];
    jac.row(3) = 2.0 * m.transpose();
    const Eigen::Vector3d step = jac.colPivHouseholderQr().solve(res);
    if (!step.allFinite()) return std::nullopt;
    m -= step;
  }
  const Vec3 mv{m[0], m[1], m[2]};
  const Vec3 f = mf_derivative(mv, params);
  const double res = std::max({std::abs(f[0]), std::abs(f[1]), std::abs(f[2]), std::abs(m.squaredNorm() - 1.0)});
  if (res <= tol) return mv;
  return std::nullopt;
}

namespace {

double field_residual(const Vec3& m, const ModelParams& params) {
  const Vec3 f = mf_derivative(m, params);
  return std::max({std::abs(f[0]), std::abs(f[1]), std::abs(f[2]), std::abs(norm2(m) - 1.0)});
}

void add_unique(std::vector<FixedPoint>& out, const Vec3& m, const ModelParams& params) {
  for (const auto& fp : out) {
    if (distance(fp.m, m) <= 1e-8) return;
  }
  FixedPoint fp;
  fp.m = m;
  fp.jacobian_eigenvalues = tangent_eigenvalues(m, params);
  fp.stability = classify(fp.jacobian_eigenvalues);
  fp.residual = field_residual(m, params);
  out.push_back(fp);
}

// A closed form is kept only if Newton agrees with it or it already solves f = 0.
void add_closed_form(std::vector<FixedPoint>& out, const Vec3& m, const ModelParams& params) {
  const auto polished = newton_fixed_point(m, params);
  if (polished && distance(*polished, m) <= 1e-8) {
    add_unique(out, *polished, params);
  } else if (field_residual(m, params) <= 1e-12) {
    add_unique(out, m, params);
  } else {
    std::ostringstream msg;
    msg << "fixed_points: closed form (" << m[0] << ", " << m[1] << ", " << m[2]
        << ") fails the Newton check, residual " << field_residual(m, params);
    throw ConvergenceError(msg.str());
  }
}

}  // namespace

std::vector<FixedPoint> fixed_points(const ModelParams& params) {
  std::vector<FixedPoint> out;
  const double k = params.kappa, w0 = params.omega0, wz = params.omega_z;
  if (params.omega_x == 0.0 && k > 0.0) {
    if (std::abs(w0) >= k) {
      const double my = k / w0;
      const double mx = std::sqrt(std::max(0.0, 1.0 - my * my));
      add_closed_form(out, {mx, my, 0.0}, params);
      add_closed_form(out, {-mx, my, 0.0}, params);
    }
    const double d = k * k + 4.0 * wz * wz;
    if (d >= w0 * w0) {
      const double mx = 2.0 * wz * w0 / d, my = k * w0 / d;
      const double mz = std::sqrt(std::max(0.0, 1.0 - w0 * w0 / d));
      add_closed_form(out, {mx, my, mz}, params);
      add_closed_form(out, {mx, my, -mz}, params);
    }
  } else {
    constexpr int nq = 9, np = 16;
    for (int i = 0; i < nq; ++i) {
      for (int j = 0; j < np; ++j) {
        const double q = -1.0 + (2.0 * i + 1.0) / nq;
        const double pp = j * std::numbers::pi / np;
        if (const auto m = newton_fixed_point(from_qp(q, pp), params)) add_unique(out, *m, params);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const FixedPoint& a, const FixedPoint& b) { return a.m < b.m; });
  return out;
}

Vec3 from_qp(double q, double p) {
  const double rho = std::sqrt(std::max(0.0, 1.0 - q * q));
  return {rho * std::cos(2.0 * p), rho * std::sin(2.0 * p), q};
}

std::pair<double, double> to_qp(const Vec3& m) {
  double p = 0.5 * std::atan2(m[1], m[0]);
  if (p < 0.0) p += std::numbers::pi;
  return {m[2], p};
}

std::string to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::Closed: return "closed";
    case OrbitClass::Attracted: return "attracted";
    case OrbitClass::Escaped: return "escaped";
    case OrbitClass::Fixed: return "fixed";
    case OrbitClass::Failed: return "failed";
  }
  return "unknown";
}

OrbitResult classify_orbit(const Vec3& m0, const ModelParams& params, const std::vector<FixedPoint>& fixed,
                           const OrbitOptions& options) {
  OrbitResult out;
  const Vec3 f0 = mf_derivative(m0, params);
  const double f0_norm = std::sqrt(norm2(f0));
  if (f0_norm < 1e-10) {
    out.cls = OrbitClass::Fixed;
    return out;
  }
  const Vec3 n{f0[0] / f0_norm, f0[1] / f0_norm, f0[2] / f0_norm};
  auto section = [&](const Vec3& m) { return dot(n, {m[0] - m0[0], m[1] - m0[1], m[2] - m0[2]}); };

  std::vector<Vec3> attractors;
  for (const auto& fp : fixed) {
    if (fp.stability == Stability::Attracting) attractors.push_back(fp.m);
  }

  auto stepper = odeint::make_dense_output(options.tol, options.tol, odeint::runge_kutta_dopri5<Vec3>());
  const Field field{params};
  stepper.initialize(m0, 0.0, 1e-3);
  bool armed = false;
  int close_returns = 0;
  out.return_distance = std::numeric_limits<double>::infinity();
  double prev_h = 0.0;
  while (stepper.current_time() < options.t_max) {
    const auto [t0, t1] = stepper.do_step(field);
    const Vec3& m = stepper.current_state();
    for (const auto& a : attractors) {
      if (distance(m, a) < options.capture_radius) {
        out.cls = OrbitClass::Attracted;
        return out;
      }
    }
    const double h = section(m);
    if (!armed && h < 0.0) armed = true;
    if (armed && prev_h < 0.0 && h >= 0.0) {
      // Bisect the upward crossing on the dense output.
      double lo = t0, hi = t1;
      Vec3 x;
      for (int it = 0; it < 60 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, x);
        (section(x) < 0.0 ? lo : hi) = mid;
      }
      stepper.calc_state(hi, x);
      const double d = distance(x, m0);
      out.return_distance = std::min(out.return_distance, d);
      if (d < options.return_tol) {
        if (!out.period) out.period = hi;
        if (++close_returns >= 2) {
          out.cls = OrbitClass::Closed;
          return out;
        }
      }
    }
    prev_h = h;
  }
  if (close_returns == 1) {
    out.cls = OrbitClass::Closed;
    return out;
  }
  out.period.reset();
  out.cls = OrbitClass::Escaped;
  return out;
}

double Portrait::fraction(OrbitClass c) const {
  if (seeds.empty()) return 0.0;
  const auto count = std::count_if(seeds.begin(), seeds.end(), [&](const PortraitSeed& s) { return s.result.cls == c; });
  return static_cast<double>(count) / static_cast<double>(seeds.size());
}

namespace {

std::vector<std::pair<double, double>> qp_trace(const Vec3& m0, const ModelParams& params, double dt, double t_max) {
  std::vector<std::pair<double, double>> trace;
  Vec3 m = m0;
  auto stepper = odeint::make_controlled(1e-10, 1e-10, odeint::runge_kutta_dopri5<Vec3>());
  const auto steps = static_cast<std::size_t>(std::lround(std::ceil(t_max / dt - 1e-9)));
  odeint::integrate_n_steps(stepper, Field{params}, m, 0.0, dt, steps,
                            [&](const Vec3& x, double) { trace.push_back(to_qp(x)); });
  return trace;
}

}  // namespace

Portrait phase_portrait(const ModelParams& params, const PortraitOptions& options) {
  if (options.n_q < 2 || options.n_p < 2) throw DomainError("phase_portrait: resolution must be at least 2x2");
  Portrait out;
  out.params = params;
  out.fixed = fixed_points(params);
  out.seeds.resize(static_cast<std::size_t>(options.n_q) * options.n_p);
  for (int i = 0; i < options.n_q; ++i) {
    for (int j = 0; j < options.n_p; ++j) {
      auto& s = out.seeds[static_cast<std::size_t>(i) * options.n_p + j];
      s.q = -1.0 + (2.0 * i + 1.0) / options.n_q;
      s.p = j * std::numbers::pi / options.n_p;
    }
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t idx = 0; idx < out.seeds.size(); ++idx) {
    auto& s = out.seeds[idx];
    const Vec3 m0 = from_qp(s.q, s.p);
    try {
      s.result = classify_orbit(m0, params, out.fixed, options.orbit);
      if (options.trace_dt > 0.0) s.trace = qp_trace(m0, params, options.trace_dt, options.trace_t_max);
    } catch (const std::exception& e) {
      s.result.cls = OrbitClass::Failed;
      s.result.error = e.what();
    }
  }
  return out;
}

bool has_attractor_orbits(const ModelParams& params, const PortraitOptions& options, double ring_radius) {
  const auto fixed = fixed_points(params);
  for (const auto& fp : fixed) {
    const auto [e1, e2] = tangent_basis(fp.m);
    for (int a = 0; a < 8; ++a) {
      const double ang = a * std::numbers::pi / 4.0;
      const Vec3 m = normalized({fp.m[0] + ring_radius * (std::cos(ang) * e1[0] + std::sin(ang) * e2[0]),
                                 fp.m[1] + ring_radius * (std::cos(ang) * e1[1] + std::sin(ang) * e2[1]),
                                 fp.m[2] + ring_radius * (std::cos(ang) * e1[2] + std::sin(ang) * e2[2])});
      if (classify_orbit(m, params, fixed, options.orbit).cls == OrbitClass::Attracted) return true;
    }
  }
  return phase_portrait(params, options).fraction(OrbitClass::Attracted) > 0.0;
}

Transition locate_transition(const ModelParams& params, double lo, double hi, double tol,
                             const PortraitOptions& options) {
  if (!(lo < hi) || !(tol > 0.0)) throw DomainError("locate_transition: need lo < hi and tol > 0");
  auto attracted = [&](double wz) {
    ModelParams p = params;
    p.omega_z = wz;
    return has_attractor_orbits(p, options);
  };
  if (attracted(lo)) throw DomainError("locate_transition: attracted orbits already at the lower bracket");
  if (!attracted(hi)) throw DomainError("locate_transition: no attracted orbits at the upper bracket");
  Transition t{0.0, lo, hi, 0};
  while (t.upper - t.lower > tol) {
    const double mid = 0.5 * (t.lower + t.upper);
    (attracted(mid) ? t.upper : t.lower) = mid;
    ++t.iterations;
  }
  t.omega_z = 0.5 * (t.lower + t.upper);
  return t;
}

std::optional<double> analytic_transition(const ModelParams& params) {
  const double x = params.omega0 * params.omega0 - params.kappa * params.kappa;
  if (x < 0.0) return std::nullopt;
  return 0.5 * std::sqrt(x);
}

InvolutionReport involution_check(const MfTrajectory& traj, double tol) {
  InvolutionReport out;
  if (traj.records.size() < 2) {
    out.passed = true;
    return out;
  }
  const Vec3& start = traj.records.front().m;
  const Vec3& end = traj.records.back().m;
  const double span = traj.records.back().t - traj.records.front().t;
  const Vec3 back = mf_propagate({end[0], end[1], -end[2]}, traj.params, span);
  out.mismatch = distance(back, {start[0], start[1], -start[2]});
  out.passed = out.mismatch <= tol;
  return out;
}

}  // namespace btc::meanfield
