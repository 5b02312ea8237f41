#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "btc/liouvillian.hpp"

namespace btc::meanfield {

/// Reduced magnetization m^a = <S^a>/S.
using Vec3 = std::array<double, 3>;

/// Bloch vector (sin th cos ph, sin th sin ph, cos th) of a coherent state.
Vec3 bloch_vector(double theta, double phi);

Vec3 mf_derivative(const Vec3& m, const ModelParams& params);

/// Jacobian df/dm, row-major.
std::array<std::array<double, 3>, 3> mf_jacobian(const Vec3& m, const ModelParams& params);

/// M = m^x / (m^y - omega0/kappa). Only defined for omega_x = omega_z = 0;
/// nullopt when the denominator is below 1e-12 (the orbit touches the branch line).
std::optional<double> conserved_M(const Vec3& m, const ModelParams& params);

/// True when R has an oscillatory closed form: omega_z > omega_x, or omega_z = omega_x = 0.
bool has_conserved_R(const ModelParams& params);

struct BranchState {
  int n = 0;
  bool initialized = false;
  double last_branch_value = 0.0;
  double last_R = 0.0;
};

struct ConservedR {
  double R = 0.0;
  BranchState state;
  /// |Re| of the bracket lambda_- log z - lambda_+ log z*, which must be
  /// purely imaginary for R to be real.
  double reality_residual = 0.0;
  /// Sign-change function of the branch line (kappa m^y + 2 omega_z m^x - omega0 at omega_x = 0).
  double branch_value = 0.0;
};

/// R = 2 g log|z|^2 - 2 kappa atan(Im z / Re z) + 2 kappa pi n, with
/// g = sqrt(omega_z (omega_z - omega_x)), lambda_+ = kappa + 2 i g and
/// z = lambda_+ (m^y - i r m^x) - omega0, r = sqrt(1 - omega_x/omega_z).
/// At omega_x = 0 this is
///   2 omega_z log(v^2 + u^2) + 2 kappa atan(u / v) + 2 kappa pi n,
///   u = kappa m^x - 2 omega_z m^y, v = kappa m^y + 2 omega_z m^x - omega0,
/// and at omega_z = 0 it is 2 kappa atan(M).
/// When Re z changes sign relative to the previous call, n is shifted by the
/// integer that keeps R closest to its previous value.
/// Throws DomainError unless has_conserved_R(params).
ConservedR conserved_R(const Vec3& m, const ModelParams& params, const BranchState& state = {});

struct ConservedRecord {
  double t = 0.0;
  Vec3 m{};
  double norm = 0.0;
  std::optional<double> M;
  std::optional<double> R;
  int branch_n = 0;
  double reality_residual = 0.0;
};

enum class Integrator { RK4, Adaptive };

struct MfOptions {
  double t_max = 100.0;
  /// RK4 step, and the output spacing for both integrators.
  double dt = 0.01;
  Integrator integrator = Integrator::Adaptive;
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  /// Abort when | |m|^2 - 1 | exceeds this.
  double norm_abort = 1e-7;
};

struct MfTrajectory {
  ModelParams params;
  std::vector<ConservedRecord> records;
  double max_norm_drift = 0.0;
};

/// Integrates the mean-field equations and evaluates the conserved
/// quantities at each output time. Throws DomainError if |m0| differs from 1
/// by more than 1e-12, ConvergenceError on norm drift.
MfTrajectory mf_integrate(const Vec3& m0, const ModelParams& params, const MfOptions& options = {});

/// Propagates m by time t without recording (adaptive, tight tolerances).
Vec3 mf_propagate(const Vec3& m0, const ModelParams& params, double t, double tol = 1e-12);

enum class Stability { CenterLike, Attracting, Repelling, Saddle };
std::string to_string(Stability s);

struct FixedPoint {
  Vec3 m{};
  Stability stability = Stability::CenterLike;
  /// Eigenvalues of the Jacobian restricted to the tangent plane of the sphere.
  std::array<cplx, 2> jacobian_eigenvalues{};
  double residual = 0.0;
};

/// Linearization on the sphere at m.
std::array<cplx, 2> tangent_eigenvalues(const Vec3& m, const ModelParams& params);
Stability classify(const std::array<cplx, 2>& eigenvalues, double tol = 1e-9);

/// Newton iteration for f(m) = 0 with |m| = 1. nullopt if it does not reach `tol`.
std::optional<Vec3> newton_fixed_point(const Vec3& seed, const ModelParams& params, double tol = 1e-12,
                                       int max_iterations = 60);

/// Fixed points on the unit sphere. At omega_x = 0 the closed forms are used
/// (trivial pair for omega0 >= kappa, nontrivial pair for
/// kappa^2 + 4 omega_z^2 >= omega0^2) and polished by Newton; otherwise Newton
/// runs from a grid of seeds. Duplicates within 1e-8 are merged. Throws
/// ConvergenceError if a closed form fails its Newton check.
std::vector<FixedPoint> fixed_points(const ModelParams& params);

/// (Q, P) -> m with m^z = Q, m^x = sqrt(1-Q^2) cos 2P, m^y = sqrt(1-Q^2) sin 2P.
Vec3 from_qp(double q, double p);
std::pair<double, double> to_qp(const Vec3& m);

enum class OrbitClass { Closed, Attracted, Escaped, Fixed, Failed };
std::string to_string(OrbitClass c);

struct OrbitResult {
  OrbitClass cls = OrbitClass::Escaped;
  /// First Poincare return time for closed orbits.
  std::optional<double> period;
  /// Closest Poincare return distance found.
  double return_distance = 0.0;
  std::string error;
};

struct OrbitOptions {
  double t_max = 500.0;
  double return_tol = 1e-4;
  /// Attracted once within this distance of an attracting fixed point.
  double capture_radius = 1e-6;
  double tol = 1e-11;
};

/// Classifies the orbit through m0: closed (returns to the Poincare section
/// through m0, normal to f(m0), within return_tol on two successive returns),
/// attracted (reaches an attracting fixed point), or escaped.
OrbitResult classify_orbit(const Vec3& m0, const ModelParams& params, const std::vector<FixedPoint>& fixed,
                           const OrbitOptions& options = {});

struct PortraitSeed {
  double q = 0.0;
  double p = 0.0;
  OrbitResult result;
  /// (Q, P) samples every `trace_dt` when requested.
  std::vector<std::pair<double, double>> trace;
};

struct PortraitOptions {
  int n_q = 12;
  int n_p = 12;
  OrbitOptions orbit{};
  /// Sampling interval of the stored (Q, P) traces; <= 0 stores none.
  double trace_dt = 0.0;
  double trace_t_max = 20.0;
};

struct Portrait {
  ModelParams params;
  std::vector<FixedPoint> fixed;
  /// Row-major over (q, p) seeds: Q_i = -1 + (2i+1)/n_q, P_j = j pi / n_p.
  std::vector<PortraitSeed> seeds;
  double fraction(OrbitClass c) const;
};

/// Integrates every grid seed (in parallel; output order is the grid order).
Portrait phase_portrait(const ModelParams& params, const PortraitOptions& options = {});

/// Whether any orbit is attracted: grid seeds plus seeds on a ring of radius
/// `ring_radius` around each fixed point.
bool has_attractor_orbits(const ModelParams& params, const PortraitOptions& options, double ring_radius = 1e-2);

struct Transition {
  double omega_z = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
};

/// Bisection in omega_z over [lo, hi] for the onset of attracted orbits.
/// Requires no attractor at lo and an attractor at hi.
Transition locate_transition(const ModelParams& params, double lo, double hi, double tol = 1e-3,
                             const PortraitOptions& options = {});

/// kappa^2 + 4 omega_z^2 = omega0^2 solved for omega_z (omega_x = 0); nullopt when omega0 < kappa.
std::optional<double> analytic_transition(const ModelParams& params);

struct InvolutionReport {
  bool passed = false;
  double mismatch = 0.0;
};

/// Time reversal with m^z -> -m^z: propagating the image of m(T) for T must
/// land on the image of m(0).
InvolutionReport involution_check(const MfTrajectory& traj, double tol = 1e-6);

}  // namespace btc::meanfield
