#include "btc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseLU>

#include "btc/error.hpp"

namespace btc::dynamics {

ObservableRecord measure(const spin::DensityMatrix& state, double t) {
  const auto& sector = state.sector;
  const auto& rho = state.rho;
  const int dim = sector.dim();
  const double s = sector.spin();

  cplx trace = 0.0, s_plus = 0.0, s_plus_sq = 0.0;
  double sz = 0.0, sz_sq = 0.0, sp_sm = 0.0, sm_sp = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double m = sector.m_of(k);
    const double pop = rho(k, k).real();
    const double c = spin::lowering_coefficient(sector, k);
    const double c_prev = k > 0 ? spin::lowering_coefficient(sector, k - 1) : 0.0;
    trace += rho(k, k);
    sz += m * pop;
    sz_sq += m * m * pop;
    sp_sm += c * c * pop;
    sm_sp += c_prev * c_prev * pop;
    // Tr(S+ rho) = sum_k S+(k, k+1) rho(k+1, k)
    if (k + 1 < dim) s_plus += c * rho(k + 1, k);
    if (k + 2 < dim) s_plus_sq += c * spin::lowering_coefficient(sector, k + 1) * rho(k + 2, k);
  }
  const double sx = s_plus.real();
  const double sy = s_plus.imag();
  // Sx^2 = (S+^2 + S-^2 + S+S- + S-S+)/4, Sy^2 = (S+S- + S-S+ - S+^2 - S-^2)/4
  const double sx_sq = 0.5 * s_plus_sq.real() + 0.25 * (sp_sm + sm_sp);
  const double sy_sq = -0.5 * s_plus_sq.real() + 0.25 * (sp_sm + sm_sp);

  ObservableRecord r;
  r.t = t;
  r.sx = sx / s;
  r.sy = sy / s;
  r.sz = sz / s;
  r.var_x = (sx_sq - sx * sx) / s;
  r.var_y = (sy_sq - sy * sy) / s;
  r.var_z = (sz_sq - sz * sz) / s;
  r.trace = trace.real();
  r.purity = rho.cwiseAbs2().sum();  // Tr(rho^2) for Hermitian rho
  return r;
}

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.t);
  return out;
}

std::vector<double> Trajectory::column(const std::string& name) const {
  double ObservableRecord::*field = nullptr;
  if (name == "t") field = &ObservableRecord::t;
  else if (name == "sx") field = &ObservableRecord::sx;
  else if (name == "sy") field = &ObservableRecord::sy;
  else if (name == "sz") field = &ObservableRecord::sz;
  else if (name == "var_x") field = &ObservableRecord::var_x;
  else if (name == "var_y") field = &ObservableRecord::var_y;
  else if (name == "var_z") field = &ObservableRecord::var_z;
  else if (name == "trace") field = &ObservableRecord::trace;
  else if (name == "purity") field = &ObservableRecord::purity;
  else throw DomainError("unknown observable '" + name + "'");
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.*field);
  return out;
}

double spectral_radius_bound(const ModelParams& params) {
  const lindblad::LiouvillianStencil stencil(params);
  double h_row = 0.0, a_max = 0.0, c_sq_max = 0.0;
  for (int k = 0; k < stencil.dim(); ++k) {
    double row = 0.0;
    for (int o = -2; o <= 2; ++o) row += std::abs(stencil.h(k, o));
    h_row = std::max(h_row, row);
    a_max = std::max(a_max, stencil.decay_diag(k));
    c_sq_max = std::max(c_sq_max, stencil.lowering(k) * stencil.lowering(k));
  }
  return 2.0 * h_row + stencil.rate() * (c_sq_max + a_max);
}

Trajectory evolve(const ModelParams& params, const spin::DensityMatrix& rho0, const EvolveOptions& options) {
  params.validate();
  if (!(options.dt > 0.0)) throw DomainError("evolve: dt must be > 0");
  if (!(options.t_max >= 0.0)) throw DomainError("evolve: t_max must be >= 0");
  if (options.stride < 1) throw DomainError("evolve: stride must be >= 1");
  if (!(rho0.sector == params.sector())) throw DimensionError("evolve: initial state sector does not match n_spins");
  const double margin = options.dt * spectral_radius_bound(params);
  if (margin > options.stability_limit) {
    std::ostringstream msg;
    msg << "evolve: dt=" << options.dt << " too large for n_spins=" << params.n_spins << " (dt*||L|| bound = " << margin
        << " > " << options.stability_limit << ")";
    throw DomainError(msg.str());
  }

  const lindblad::LiouvillianStencil stencil(params);
  const auto sector = params.sector();
  const Eigen::Index n = stencil.vec_size();
  CVector y = rho0.vec();
  CVector k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double dt = options.dt;
  const long steps = std::lround(std::ceil(options.t_max / dt - 1e-9));

  Trajectory traj{params, {}, 0.0, 0.0, rho0};
  auto record = [&](double t) {
    const auto state = spin::DensityMatrix::from_vec(sector, y);
    traj.records.push_back(measure(state, t));
    const double drift = std::abs(traj.records.back().trace - 1.0);
    traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
    traj.max_hermiticity_error = std::max(traj.max_hermiticity_error, state.hermiticity_error());
    if (drift > options.trace_abort) {
      std::ostringstream msg;
      msg << "evolve: trace drift " << drift << " at t=" << t << " exceeds " << options.trace_abort
          << "; reduce dt (currently " << dt << ")";
      throw ConvergenceError(msg.str());
    }
  };

  record(0.0);
  for (long step = 1; step <= steps; ++step) {
    stencil.apply(y, k1);
    tmp = y + (0.5 * dt) * k1;
    stencil.apply(tmp, k2);
    tmp = y + (0.5 * dt) * k2;
    stencil.apply(tmp, k3);
    tmp = y + dt * k3;
    stencil.apply(tmp, k4);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (step % options.stride == 0 || step == steps) record(step * dt);
  }
  traj.final_state = spin::DensityMatrix::from_vec(sector, y);
  return traj;
}

double ness_residual(const ModelParams& params, const spin::DensityMatrix& rho) {
  const CVector v = rho.vec();
  return lindblad::apply_superoperator(params, std::span<const cplx>(v.data(), v.size())).norm();
}

namespace {

spin::DensityMatrix finalize(const spin::SpinSector& sector, const CVector& x) {
  spin::DensityMatrix out = spin::DensityMatrix::from_vec(sector, x);
  out.rho = 0.5 * (out.rho + out.rho.adjoint()).eval();
  out.rho /= out.rho.trace();
  return out;
}

using SparseLU = Eigen::SparseLU<SparseCMatrix, Eigen::COLAMDOrdering<int>>;

void factorize(SparseLU& lu, const SparseCMatrix& a, const char* what) {
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw ConvergenceError(std::string("steady_state: ") + what + " failed: " + lu.lastErrorMessage());
}

NessResult solve_trace_completed(const lindblad::Superoperator& l, const NessOptions& options) {
  const int dim = l.sector.dim();
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(l.matrix.nonZeros() + dim);
  for (int col = 0; col < l.matrix.outerSize(); ++col) {
    for (SparseCMatrix::InnerIterator it(l.matrix, col); it; ++it) {
      if (it.row() != 0) triplets.emplace_back(it.row(), col, it.value());
    }
  }
  for (int k = 0; k < dim; ++k) triplets.emplace_back(0, k + dim * k, 1.0);
  SparseCMatrix completed(l.rows(), l.rows());
  completed.setFromTriplets(triplets.begin(), triplets.end());
  completed.makeCompressed();

  SparseLU lu;
  factorize(lu, completed, "sparse LU of the trace-completed Liouvillian");
  CVector rhs = CVector::Zero(l.rows());
  rhs[0] = 1.0;
  CVector x = lu.solve(rhs);
  NessResult result{finalize(l.sector, x), 0.0, 1};
  result.residual = ness_residual(l.params, result.rho);
  // One step of iterative refinement usually buys a few digits.
  for (int it = 0; it < 3 && result.residual > options.residual_tol; ++it) {
    const CVector r = rhs - completed * x;
    x += lu.solve(r);
    result.rho = finalize(l.sector, x);
    result.residual = ness_residual(l.params, result.rho);
    ++result.iterations;
  }
  return result;
}

NessResult solve_inverse_iteration(const lindblad::Superoperator& l, const NessOptions& options) {
  SparseCMatrix shifted = l.matrix;
  SparseCMatrix id(l.rows(), l.rows());
  id.setIdentity();
  shifted -= options.shift * l.params.kappa * id;
  SparseLU lu;
  factorize(lu, shifted, "sparse LU of the shifted Liouvillian");

  CVector x = spin::maximally_mixed(l.sector).vec();
  NessResult result{finalize(l.sector, x), 0.0, 0};
  result.residual = ness_residual(l.params, result.rho);
  while (result.iterations < options.max_iterations && result.residual > options.residual_tol) {
    x = lu.solve(x);
    x /= x.norm();
    result.rho = finalize(l.sector, x);
    result.residual = ness_residual(l.params, result.rho);
    ++result.iterations;
  }
  return result;
}

}  // namespace

NessResult steady_state(const ModelParams& params, const NessOptions& options) {
  const auto l = lindblad::build_superoperator(params, options.max_rows);
  NessResult result = options.method == NessMethod::SparseLU ? solve_trace_completed(l, options)
                                                             : solve_inverse_iteration(l, options);
  if (!(result.residual <= options.residual_tol)) {
    std::ostringstream msg;
    msg << "steady_state: residual ||L rho|| = " << result.residual << " above tolerance " << options.residual_tol
        << " after " << result.iterations << " solve(s), n_spins=" << params.n_spins;
    throw ConvergenceError(msg.str());
  }
  return result;
}

}  // namespace btc::dynamics
