#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btc/liouvillian.hpp"

namespace btc::dynamics {

/// Per-time observables, normalized by S: <S^a>/S and Var(S^a)/S.
struct ObservableRecord {
  double t = 0.0;
  double sx = 0.0, sy = 0.0, sz = 0.0;
  double var_x = 0.0, var_y = 0.0, var_z = 0.0;
  double trace = 0.0;
  double purity = 0.0;
};

/// Collective-spin observables of a single state (also used for the NESS).
ObservableRecord measure(const spin::DensityMatrix& rho, double t = 0.0);

struct Trajectory {
  ModelParams params;
  std::vector<ObservableRecord> records;
  /// Largest |Tr rho - 1| and Hermiticity defect seen at recorded times.
  double max_trace_drift = 0.0;
  double max_hermiticity_error = 0.0;
  spin::DensityMatrix final_state{spin::SpinSector(1), CMatrix()};

  std::vector<double> times() const;
  /// One column of the records by name: sx, sy, sz, var_x, var_y, var_z, trace, purity.
  std::vector<double> column(const std::string& name) const;
};

struct EvolveOptions {
  double t_max = 50.0;
  double dt = 0.01;
  /// Record every `stride` steps (the initial state is always recorded).
  int stride = 10;
  /// Abort when |Tr rho - 1| exceeds this.
  double trace_abort = 1e-5;
  /// Refuse dt whose RK4 stability margin dt * ||L||_bound exceeds this.
  double stability_limit = 2.5;
};

/// Upper bound on the spectral radius of L (Gershgorin-style, from the
/// banded coefficients); used to reject unstable fixed steps.
double spectral_radius_bound(const ModelParams& params);

/// Fixed-step classical RK4 on vec(rho) under the matrix-free Liouvillian.
/// Throws DomainError for invalid steps and ConvergenceError on trace drift.
Trajectory evolve(const ModelParams& params, const spin::DensityMatrix& rho0, const EvolveOptions& options = {});

enum class NessMethod { SparseLU, InverseIteration };

struct NessOptions {
  NessMethod method = NessMethod::SparseLU;
  /// Required ||L vec(rho_ss)||_2 (units of kappa).
  double residual_tol = 1e-9;
  /// Shift used by inverse iteration (units of kappa).
  double shift = 1e-3;
  int max_iterations = 50;
  std::int64_t max_rows = lindblad::kDefaultMaxRows;
};

struct NessResult {
  spin::DensityMatrix rho;
  double residual = 0.0;
  int iterations = 0;
};

/// Non-equilibrium steady state: the trace-one kernel vector of L.
///
/// SparseLU solves L' x = e_0 where L' is L with the (0,0) population row
/// replaced by the trace functional; this row of L is linearly dependent on
/// the other population rows, so L' is nonsingular when the kernel is 1-D.
/// InverseIteration repeatedly solves (L - shift) x_{k+1} = x_k.
NessResult steady_state(const ModelParams& params, const NessOptions& options = {});

/// ||L vec(rho)||_2 via the matrix-free kernel.
double ness_residual(const ModelParams& params, const spin::DensityMatrix& rho);

}  // namespace btc::dynamics
