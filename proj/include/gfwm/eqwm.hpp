// Equilibrium stress-balance wall model: given the LES velocity magnitude at a
// matching height, recover the friction velocity from the mixing-length closure.
// Two interchangeable solvers: grid-free spectral quadrature of the integrated
// profile, and a finite-volume reference on an embedded stretched grid.

#ifndef GFWM_EQWM_HPP
#define GFWM_EQWM_HPP

#include <cstdint>
#include <vector>

#include "gfwm/quadrature.hpp"

namespace gfwm::eqwm {

struct ClosureConstants {
  double kappa = 0.4;
  double a_plus = 26.0;  // van Driest damping scale
  double b = 5.0;        // log-law intercept used for seeding and synthetic inputs
};

// State of one wall face as seen by the model. u_les is the magnitude of the
// wall-parallel velocity at y = h_wm.
struct WallModelInput {
  double u_les = 0.0;  // m/s, >= 0
  double h_wm = 0.0;   // m, > 0
  double nu = 0.0;     // m^2/s, > 0
  double rho = 0.0;    // kg/m^3, > 0
  void validate() const;  // throws std::invalid_argument
};

enum class Method { SpectralLinear, SpectralClustered, FiniteVolume };

// Instrumented operation counts, accumulated when a non-null pointer is passed
// to a solver. Wall-clock comparisons are reported elsewhere; claims about
// algorithmic cost rest on these.
struct WorkCounters {
  std::uint64_t integrand_evals = 0;  // spectral: one per node per residual
  std::uint64_t residual_evals = 0;   // spectral: secant residual evaluations
  std::uint64_t sweep_ops = 0;        // fv: per-cell work, all sweeps
  std::uint64_t sweeps = 0;           // fv: picard iterations
};

struct EqwmSolution {
  double u_tau = 0.0;
  double tau_w = 0.0;     // rho * u_tau * u_tau
  int points = 0;         // quadrature size or cell count
  int iterations = 0;     // secant residual evaluations, or picard sweeps
  double residual = 0.0;  // last matching residual (m/s), or tau_w rel change
  Method method = Method::SpectralLinear;
  double delta_nu(double nu) const { return nu / u_tau; }  // viscous length
};

// Van Driest damped mixing length in wall units.
double mixing_length_plus(double y_plus, const ClosureConstants& c);

// du+/dy+ from the constant-stress balance, quadratic-closure root.
double velocity_gradient_plus(double y_plus, const ClosureConstants& c);

// du/dy at physical height y for a trial friction velocity.
double shear_integrand(double y, double u_tau, double nu, const ClosureConstants& c);

// Secant solve of  u_les = integral_0^h du/dy dy  for u_tau.
// tol is the admissible velocity mismatch in m/s; 0 selects 1e-8 * u_les.
// u_les == 0 short-circuits to u_tau == 0. Throws ConvergenceError when the
// iteration cap is hit.
EqwmSolution solve_utau_spectral(const WallModelInput& in, int q, quad::DomainMap map,
                                 const ClosureConstants& c = {}, double tol = 0.0,
                                 int max_iters = 100, WorkCounters* wk = nullptr);

// Embedded one-dimensional grid, geometrically stretched from the wall.
// dy1_target is the wanted first cell height; the ratio is capped at 1.2 and
// the first cell grows instead when n is too small to span h.
struct FvGrid {
  int n_cells = 0;
  double ratio = 1.0;
  std::vector<double> faces;  // n+1 ascending coordinates, faces[0]=0, faces[n]=h
  std::vector<double> centers() const;
};
FvGrid make_fv_grid(int n_cells, double h, double dy1_target);

// Picard-iterated finite-volume solve of the constant-stress ODE on the given
// grid, eddy viscosity lagged one sweep. tol bounds the relative change of
// tau_w between sweeps. laminar_only disables the eddy viscosity entirely.
EqwmSolution solve_utau_fv(const WallModelInput& in, const FvGrid& grid,
                           const ClosureConstants& c = {}, double tol = 1e-6,
                           int max_iters = 200, bool laminar_only = false,
                           WorkCounters* wk = nullptr,
                           std::vector<double>* cell_velocity = nullptr);

// Velocity profile u(y) for a converged solution, by quadrature of the shear
// integrand over [0, y] per sample. Samples must lie in [0, h_wm].
std::vector<double> reconstruct_profile(const EqwmSolution& sol, const WallModelInput& in,
                                        const ClosureConstants& c,
                                        const std::vector<double>& y_samples);

// Flags an under-resolved spectral solution by the relative L2 distance of its
// profile from a re-solve with reference_q points (same map). Spectral only.
struct SpuriousDiagnosis {
  bool spurious = false;
  double l2_error = 0.0;
  int reference_q = 0;
};
SpuriousDiagnosis detect_spurious_profile(const EqwmSolution& sol, const WallModelInput& in,
                                          const ClosureConstants& c, int reference_q = 256);

// Smallest point count whose tau_w lands within error_target (relative) of a
// converged same-method reference, for a synthetic log-law channel at re_tau
// with h_wm = 0.1 delta. Exponential bracket plus bisection, capped at 1024.
struct OptimalCount {
  int count = 0;
  bool saturated = false;
  double achieved_error = 0.0;
};
OptimalCount optimal_point_count(double re_tau, Method method, double error_target,
                                 const ClosureConstants& c = {});

// Synthetic matching input for a channel at friction Reynolds number re_tau,
// with delta = 1, u_tau = 1, h_wm = 0.1 delta and a log-law matching velocity.
WallModelInput synthetic_channel_input(double re_tau, const ClosureConstants& c = {});

}  // namespace gfwm::eqwm

#endif
