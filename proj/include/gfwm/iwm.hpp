// Vertically integrated wall model: each wall face carries the wall-parallel
// momentum integrals of an assumed two-layer velocity profile and marches them
// in time with explicit Euler; a Newton solve closes the profile parameters
// against the marched integrals and the matching-point LES velocity.
//
// Profile family, per wall-parallel component i in the face frame:
//   y <= delta_i :  u_i(y) = s_i * y * u_tau / nu
//   y >  delta_i :  u_i(y) = s_i * (C_i + ln(y/h_wm)/kappa + A_i * y/h_wm)
// s_i is a signed directional velocity scale (stored in u_tau_x / u_tau_z)
// with s_x^2 + s_z^2 = u_tau^2. Under a rotation of the face frame the pair
// (s_x, s_z) and the pair (s_x*A_x, s_z*A_z) transform as vectors, so the
// profile family is closed under frame rotations and the recovered wall
// stress vector is frame invariant.
//
// All operations are pure; faces can be advanced concurrently once their
// matching data (velocities, pressure gradients, integral-term gradients) has
// been snapshotted.
#pragma once

#include <array>
#include <utility>

#include "gfwm/eqwm.hpp"

namespace gfwm::iwm {

// Wall-unit height of the sublayer/log-layer intersection used by the closure.
// Conventional rounded value of the fixed point delta+ = ln(delta+)/kappa + B;
// sublayer_height() computes the unrounded root.
inline constexpr double kSublayerPlus = 11.0;

// Solves delta+ = ln(delta+)/kappa + B by Newton iteration.
double sublayer_height(const eqwm::ClosureConstants& constants = {});

struct IwmParams {
  double u_tau = 0.0;    // total friction velocity, m/s
  double u_tau_x = 0.0;  // signed directional velocity scale s_x, m/s
  double u_tau_z = 0.0;  // signed directional velocity scale s_z, m/s
  double a_x = 0.0;      // linear-departure slope of the outer profile
  double a_z = 0.0;
  double c_x = 0.0;      // log intercept, fixed by continuity at delta_i
  double c_z = 0.0;
  double delta_i = 0.0;  // sublayer height, m; equals h_wm on the viscous branch
  bool viscous_only = false;  // sublayer fills the whole layer

  // Enforces u_tau > 0, s_x^2 + s_z^2 == u_tau^2 (1e-8 relative) and
  // 0 < delta_i <= h_wm. The all-zero no-flow state is the one allowed
  // exception. Throws std::invalid_argument.
  void validate(double h_wm) const;

  bool is_zero() const;
};

struct IntegralTerms {
  double l_x = 0.0;   // integral of u over the layer, m^2/s
  double l_z = 0.0;
  double l_xx = 0.0;  // integrals of u*u, u*w, w*w, m^3/s^2
  double l_zz = 0.0;
  double l_xz = 0.0;
};

// Spatial derivatives of the five integral terms along the face-frame x and z.
struct IntegralGradients {
  double dlx_dx = 0.0, dlz_dx = 0.0;
  double dlxx_dx = 0.0, dlzz_dx = 0.0, dlxz_dx = 0.0;
  double dlx_dz = 0.0, dlz_dz = 0.0;
  double dlxx_dz = 0.0, dlzz_dz = 0.0, dlxz_dz = 0.0;
};

struct MatchingData {
  double u_les = 0.0;  // wall-parallel velocity at the matching height, m/s
  double w_les = 0.0;
  double dpdx = 0.0;   // wall-parallel pressure gradient, Pa/m
  double dpdz = 0.0;
  IntegralGradients grad_terms;
  double dt = 0.0;     // time step, s; 0 requests a no-op advance

  void validate() const;  // finite fields, dt >= 0
};

struct WallStresses {
  double tau_w_x = 0.0;  // wall shear stress components, Pa
  double tau_w_z = 0.0;
  double tau_h_x = 0.0;  // shear stress at the matching height, Pa
  double tau_h_z = 0.0;
};

struct IwmFaceState {
  IwmParams params;
  IntegralTerms integrals;  // always consistent with params via integral_terms()
  double tau_w_x = 0.0, tau_w_z = 0.0;
  double tau_h_x = 0.0, tau_h_z = 0.0;
  double time = 0.0;
  int newton_iters = 0;       // inner iterations spent by the latest solve
  bool fallback_used = false; // latest solve needed the equilibrium reseed
};

struct IwmOptions {
  bool legacy_sublayer = false;  // historical wall-stress extraction: both
                                 // components reported as rho*u_tau^2
  double newton_tol = 1e-10;     // scaled residual infinity norm
  int max_newton_iters = 50;
  double fd_step_rel = 1e-7;     // Jacobian forward-difference relative step
  double filter_time_constant = 0.0;  // matching-velocity filter; 0 disables
};

struct NewtonDiagnostics {
  int iterations = 0;
  double residual = 0.0;
  bool fallback_used = false;
};

// Velocity pair (u, w) at height y in [0, h_wm]. Throws std::out_of_range for
// y outside the layer.
std::pair<double, double> composite_profile(
    const IwmParams& params, double h_wm, double nu, double y,
    const eqwm::ClosureConstants& constants = {});

// Closed-form layer integrals of the composite profile; no numerical
// quadrature is involved.
IntegralTerms integral_terms(const IwmParams& params, double h_wm, double nu,
                             const eqwm::ClosureConstants& constants = {});

// Wall stress tau_w_i = rho * u_tau * s_i (so |tau_w| = rho * u_tau^2) and
// matching-height stress tau_h_i = rho * (nu + nu_t(h_wm)) * du_i/dy|_h with a
// damped mixing-length nu_t. legacy_sublayer switches the wall stress to the
// historical extraction tau_w_x = tau_w_z = rho * u_tau^2, which ignores the
// flow direction within the face plane.
WallStresses wall_and_matching_stress(const IwmParams& params, double h_wm,
                                      double nu, double rho,
                                      const eqwm::ClosureConstants& constants = {},
                                      bool legacy_sublayer = false);

// One implicit closure solve: builds the explicit-Euler targets for l_x and
// l_z from the time-n state and matching data, then Newton-solves the coupled
// system (matching conditions, u_tau closure, integral targets) for the new
// parameters. delta_i and the intercepts C_i are eliminated analytically, so
// the Newton unknowns are (u_tau, s_x, s_z, A_x, A_z). On Newton failure the
// solve is reseeded from the equilibrium model; if that also fails in a
// resolvable regime a ConvergenceError is thrown. When the sublayer would
// fill the layer the pure viscous branch is taken: u_tau from the laminar
// relation sqrt(nu*|U|/h_wm), which matches the LES velocity exactly.
IwmParams newton_step_system(const IwmFaceState& state, const MatchingData& match,
                             double h_wm, double nu, double rho,
                             const eqwm::ClosureConstants& constants = {},
                             const IwmOptions& options = {},
                             NewtonDiagnostics* diag = nullptr);

// Explicit-Euler advance of one face: newton_step_system plus refreshed
// integrals, stresses and time. dt == 0 returns the state unchanged.
IwmFaceState advance_face(const IwmFaceState& state, const MatchingData& match,
                          double h_wm, double nu, double rho,
                          const eqwm::ClosureConstants& constants = {},
                          const IwmOptions& options = {});

// Stationary state under constant matching velocity and pressure gradient
// with zero integral-term gradients: the integral targets are replaced by the
// requirement that the layer momentum budget balances (tau_h - tau_w and the
// pressure term cancel per component).
IwmFaceState solve_steady(double u_les, double w_les, double dpdx, double dpdz,
                          double h_wm, double nu, double rho,
                          const eqwm::ClosureConstants& constants = {},
                          const IwmOptions& options = {});

// Equilibrium parameter set: u_tau from the spectral equilibrium solve of the
// velocity magnitude, directional scales aligned with (u_les, w_les), A = 0.
IwmParams reseed_equilibrium(double u_les, double w_les, double h_wm, double nu,
                             const eqwm::ClosureConstants& constants = {});

// Initial face state at t = 0 for a face that has only seen the instantaneous
// LES velocity: equilibrium parameters seeded from that velocity, integrals
// and stresses evaluated consistently.
IwmFaceState init_plug_flow(double u_les, double w_les, double h_wm, double nu,
                            double rho,
                            const eqwm::ClosureConstants& constants = {},
                            const IwmOptions& options = {});

// Second-order central difference from three equispaced samples; cross-check
// helper for structured drivers.
double fd_gradient_fallback(const std::array<double, 3>& values, double dx);

// Exponential relaxation filter for the matching velocity. The first apply()
// primes the state to the input; time_constant <= 0 passes input through.
class VelocityFilter {
 public:
  explicit VelocityFilter(double time_constant = 0.0);
  std::pair<double, double> apply(double u, double w, double dt);
  void reset();

 private:
  double time_constant_ = 0.0;
  bool primed_ = false;
  double uf_ = 0.0;
  double wf_ = 0.0;
};

}  // namespace gfwm::iwm
