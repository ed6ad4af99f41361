// Validation and benchmark drivers: a priori wall-stress checks against a
// reference profile, the synchronized per-step wall-model loop against
// prescribed outer flows, instrumented cost sweeps, and the gradient-sandbox
// pathology report. All drivers are deterministic: identical configs produce
// bit-identical CSV text (timing columns excluded).

#ifndef GFWM_DRIVERS_HPP
#define GFWM_DRIVERS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gfwm/iwm.hpp"
#include "gfwm/profile_data.hpp"
#include "gfwm/surface.hpp"

namespace gfwm::harness {

enum class ModelKind {
  FiniteVolume,
  SpectralLinear,
  SpectralClustered,
  Integral,
  IntegralLegacy,  // integral model with the equal-component wall-stress extraction
};

// Stable CLI/CSV spellings: fv, gq-linear, gq-clustered, iwm, iwm-legacy.
const char* model_name(ModelKind model);
ModelKind parse_model(const std::string& name);  // throws std::invalid_argument

struct DriverConfig {
  ModelKind model = ModelKind::SpectralClustered;
  double re_tau = 1000.0;
  double h_wm_over_delta = 0.1;
  int points = 0;   // quadrature size or cell count; 0 picks the count that
                    // reaches 0.5% discretization error
  double dt = 0.01;  // integral-model march step
  int steps = 0;     // integral-model march cap; 0 = 5000
  std::uint64_t seed = 0;  // reserved for stochastic drivers; no current use
  void validate() const;   // throws std::invalid_argument
};

struct AprioriReport {
  ModelKind model = ModelKind::SpectralClustered;
  double re_tau = 0.0;
  double h_wm_over_delta = 0.0;
  int points = 0;
  double u_tau = 0.0;            // predicted; the reference scale is u_tau = 1
  double tau_w_rel_error = 0.0;  // |predicted tau_w - 1|
  double profile_l2_error = 0.0; // relative L2 against the reference samples
  int iterations = 0;
};

// Feeds the profile's matching velocity to the selected model. The integral
// model is marched with zero pressure gradient until the friction velocity
// stops moving. Throws on config/profile mismatch or solver failure.
AprioriReport run_apriori(const DriverConfig& config, const ReferenceProfile& profile);
std::string apriori_csv(const std::vector<AprioriReport>& reports);

enum class OuterFlowKind { SteadyUniform, StreamwiseSine, ImpulsivePressurePulse };
const char* outer_flow_name(OuterFlowKind kind);  // steady, sine, pulse
OuterFlowKind parse_outer_flow(const std::string& name);

struct CoupledConfig {
  surface::ScenarioKind scenario = surface::ScenarioKind::UniformHex;
  OuterFlowKind flow = OuterFlowKind::SteadyUniform;
  int steps = 100;
  double dt = 0.01;
  double u0 = 16.5;          // outer speed along global x
  double amplitude = 0.0;    // sine: speed modulation; pulse: pressure gradient
  double wavelength = 2.0;   // sine period along global x
  int pulse_start = 10;      // pulse active for steps [start, start + duration)
  int pulse_duration = 5;
  double nu = 1e-3;
  double rho = 1.0;
  bool global_vector_gradients = true;
  int filter_passes = 0;
  bool legacy_sublayer = false;
  std::uint64_t seed = 0;    // reserved for stochastic drivers; no current use
  void validate() const;
};

// Stage names every loop step executes, in order.
const std::array<const char*, 6>& coupled_stage_names();

struct CoupledResult {
  std::string csv;             // one row per face per step, at stress publication
  std::string checkpoint_csv;  // final per-face model state
  std::vector<std::string> stage_log;  // steps * 6 entries
  std::vector<iwm::IwmFaceState> final_states;
  // Integral terms the last gradient pass consumed, paired with its output.
  std::vector<iwm::IntegralTerms> gradient_source_integrals;
  std::vector<iwm::IntegralGradients> final_gradients;
  double max_face_spread = 0.0;        // cross-face state spread, max over steps
  double max_gradient_magnitude = 0.0; // largest gradient entry seen
};

// Per step: stress publication, wall-scalar broadcast, gradient pipeline,
// outer-flow update, matching-data interpolation, wall-model advance. A stage
// failure aborts with a std::runtime_error naming the step and stage.
CoupledResult run_coupled_loop(const CoupledConfig& config);
CoupledResult run_coupled_loop(const CoupledConfig& config,
                               const surface::Scenario& scenario);

struct BenchCase {
  ModelKind model = ModelKind::SpectralClustered;
  double re_tau = 1000.0;
  int n = 16;
};

struct BenchConfig {
  std::vector<BenchCase> cases;
  int repetitions = 100;  // timed solves per case
  int warmups = 10;
};

struct BenchRecord {
  ModelKind model = ModelKind::SpectralClustered;
  double re_tau = 0.0;
  int n = 0;
  double tau_w_rel_error = 0.0;  // against a converged same-method reference
  std::uint64_t work = 0;   // integrand evaluations (spectral) or cell sweep ops (fv)
  std::uint64_t iters = 0;  // secant residual evaluations or picard sweeps
  double wall_ns_median = 0.0;
  double wall_ns_iqr = 0.0;
};

// Repeats each case after warmups on the synthetic channel input; counters
// and errors are per-solve and deterministic, wall times are medians with
// interquartile ranges. Integral models are not sweepable and are rejected.
std::vector<BenchRecord> run_benchmarks(const BenchConfig& config);
std::string benchmark_csv(const std::vector<BenchRecord>& records,
                          bool include_timing = true);

// Least-squares slope of ln(y) against ln(x). Needs >= 2 points, all positive.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct GradientTestReport {
  surface::ScenarioKind scenario = surface::ScenarioKind::UniformHex;
  bool global_vector = false;
  int filter_passes = 0;
  int checked_faces = 0;
  double worst_rel_error = 0.0;  // bundle-worst over faces with exact references
  // Wide-face slope error after filtering; negative when not measured.
  double filtered_recovery_error = -1.0;
  bool pass = false;
  std::string csv;  // face,rel_error,checked,defect
};

// Runs the gradient pipeline on a generated scenario against its analytic
// reference. Passing requires roundoff-level errors on the checked faces and,
// for the triangle-strip scenario, a filtered wide-face slope within 30%.
GradientTestReport run_gradient_test(surface::ScenarioKind kind, bool global_vector,
                                     int filter_passes = 0);

}  // namespace gfwm::harness

#endif
