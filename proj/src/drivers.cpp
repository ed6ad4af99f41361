#include "gfwm/drivers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gfwm::harness {

namespace {

constexpr double kPi = 3.14159265358979323846;

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

constexpr double iwm::IntegralGradients::* kGradSlots[] = {
    &iwm::IntegralGradients::dlx_dx,  &iwm::IntegralGradients::dlz_dx,
    &iwm::IntegralGradients::dlxx_dx, &iwm::IntegralGradients::dlzz_dx,
    &iwm::IntegralGradients::dlxz_dx, &iwm::IntegralGradients::dlx_dz,
    &iwm::IntegralGradients::dlz_dz,  &iwm::IntegralGradients::dlxx_dz,
    &iwm::IntegralGradients::dlzz_dz, &iwm::IntegralGradients::dlxz_dz};

double bundle_worst_error(const iwm::IntegralGradients& got,
                          const iwm::IntegralGradients& ref) {
  double worst = 0.0;
  for (auto slot : kGradSlots) {
    const double scale = std::max(1.0, std::abs(ref.*slot));
    worst = std::max(worst, std::abs(got.*slot - ref.*slot) / scale);
  }
  return worst;
}

eqwm::Method to_eqwm_method(ModelKind model) {
  switch (model) {
    case ModelKind::FiniteVolume:
      return eqwm::Method::FiniteVolume;
    case ModelKind::SpectralLinear:
      return eqwm::Method::SpectralLinear;
    case ModelKind::SpectralClustered:
      return eqwm::Method::SpectralClustered;
    default:
      fail("the integral model has no point-count sweep");
  }
  return eqwm::Method::SpectralLinear;
}

quad::DomainMap to_domain_map(ModelKind model) {
  return model == ModelKind::SpectralLinear ? quad::DomainMap::Linear
                                            : quad::DomainMap::Clustered;
}

}  // namespace

const char* model_name(ModelKind model) {
  switch (model) {
    case ModelKind::FiniteVolume:
      return "fv";
    case ModelKind::SpectralLinear:
      return "gq-linear";
    case ModelKind::SpectralClustered:
      return "gq-clustered";
    case ModelKind::Integral:
      return "iwm";
    case ModelKind::IntegralLegacy:
      return "iwm-legacy";
  }
  return "unknown";
}

ModelKind parse_model(const std::string& name) {
  if (name == "fv") return ModelKind::FiniteVolume;
  if (name == "gq-linear") return ModelKind::SpectralLinear;
  if (name == "gq-clustered") return ModelKind::SpectralClustered;
  if (name == "iwm") return ModelKind::Integral;
  if (name == "iwm-legacy") return ModelKind::IntegralLegacy;
  fail("unknown model '" + name +
       "' (expected fv, gq-linear, gq-clustered, iwm, iwm-legacy)");
  return ModelKind::FiniteVolume;
}

const char* outer_flow_name(OuterFlowKind kind) {
  switch (kind) {
    case OuterFlowKind::SteadyUniform:
      return "steady";
    case OuterFlowKind::StreamwiseSine:
      return "sine";
    case OuterFlowKind::ImpulsivePressurePulse:
      return "pulse";
  }
  return "unknown";
}

OuterFlowKind parse_outer_flow(const std::string& name) {
  if (name == "steady") return OuterFlowKind::SteadyUniform;
  if (name == "sine") return OuterFlowKind::StreamwiseSine;
  if (name == "pulse") return OuterFlowKind::ImpulsivePressurePulse;
  fail("unknown outer flow '" + name + "' (expected steady, sine, pulse)");
  return OuterFlowKind::SteadyUniform;
}

void DriverConfig::validate() const {
  if (!(re_tau > 0.0) || !std::isfinite(re_tau)) fail("driver re_tau must be positive");
  if (!(h_wm_over_delta > 0.0) || !(h_wm_over_delta < 1.0)) {
    fail("matching height fraction must sit inside (0, 1)");
  }
  if (points < 0) fail("driver point count must be nonnegative");
  if (!(dt > 0.0)) fail("driver time step must be positive");
  if (steps < 0) fail("driver step cap must be nonnegative");
}

void CoupledConfig::validate() const {
  if (steps < 0) fail("coupled loop step count must be nonnegative");
  if (!(dt > 0.0)) fail("coupled loop time step must be positive");
  if (!(u0 > 0.0)) fail("coupled loop outer speed must be positive");
  if (!std::isfinite(amplitude)) fail("coupled loop amplitude must be finite");
  if (flow == OuterFlowKind::StreamwiseSine && !(wavelength > 0.0)) {
    fail("sine outer flow needs a positive wavelength");
  }
  if (pulse_start < 0 || pulse_duration < 0) fail("pulse window must be nonnegative");
  if (!(nu > 0.0) || !(rho > 0.0)) fail("fluid properties must be positive");
  if (filter_passes < 0) fail("filter pass count must be nonnegative");
}

AprioriReport run_apriori(const DriverConfig& config, const ReferenceProfile& profile) {
  config.validate();
  if (std::abs(config.re_tau - profile.re_tau) > 1e-9 * profile.re_tau) {
    fail("config and profile disagree on re_tau");
  }

  const eqwm::ClosureConstants constants{};
  const double re = profile.re_tau;
  const double nu = 1.0 / re;  // delta = 1, reference u_tau = 1
  const double h = config.h_wm_over_delta;
  const double u_les = sample_matching_velocity(profile, h);

  eqwm::WallModelInput in;
  in.u_les = u_les;
  in.h_wm = h;
  in.nu = nu;
  in.rho = 1.0;

  AprioriReport rep;
  rep.model = config.model;
  rep.re_tau = re;
  rep.h_wm_over_delta = h;

  // Reference samples inside the modeled layer, in physical units.
  const double h_plus = h * re;
  std::vector<double> y_ref, u_ref;
  for (size_t i = 0; i < profile.y_plus.size(); ++i) {
    if (profile.y_plus[i] > 0.0 && profile.y_plus[i] <= h_plus) {
      y_ref.push_back(profile.y_plus[i] * nu);
      u_ref.push_back(profile.u_plus[i]);
    }
  }
  if (y_ref.size() < 2) fail("profile has too few samples below the matching height");

  std::vector<double> u_model;
  switch (config.model) {
    case ModelKind::FiniteVolume: {
      const int n = config.points > 0
                        ? config.points
                        : eqwm::optimal_point_count(re, eqwm::Method::FiniteVolume,
                                                    0.005, constants)
                              .count;
      const eqwm::FvGrid grid = eqwm::make_fv_grid(n, h, nu);
      const eqwm::EqwmSolution sol = eqwm::solve_utau_fv(in, grid, constants);
      rep.points = n;
      rep.iterations = sol.iterations;
      rep.u_tau = sol.u_tau;
      u_model = eqwm::reconstruct_profile(sol, in, constants, y_ref);
      break;
    }
    case ModelKind::SpectralLinear:
    case ModelKind::SpectralClustered: {
      const int q = config.points > 0
                        ? config.points
                        : eqwm::optimal_point_count(re, to_eqwm_method(config.model),
                                                    0.005, constants)
                              .count;
      const eqwm::EqwmSolution sol =
          eqwm::solve_utau_spectral(in, q, to_domain_map(config.model), constants);
      rep.points = q;
      rep.iterations = sol.iterations;
      rep.u_tau = sol.u_tau;
      u_model = eqwm::reconstruct_profile(sol, in, constants, y_ref);
      break;
    }
    case ModelKind::Integral:
    case ModelKind::IntegralLegacy: {
      iwm::IwmOptions opt;
      opt.legacy_sublayer = config.model == ModelKind::IntegralLegacy;
      const int cap = config.steps > 0 ? config.steps : 5000;
      iwm::IwmFaceState state =
          iwm::init_plug_flow(u_les, 0.0, h, nu, 1.0, constants, opt);
      iwm::MatchingData md;
      md.u_les = u_les;
      md.dt = config.dt;
      int taken = 0;
      while (taken < cap) {
        const iwm::IwmFaceState next =
            iwm::advance_face(state, md, h, nu, 1.0, constants, opt);
        const double du = std::abs(next.params.u_tau - state.params.u_tau);
        state = next;
        ++taken;
        if (du <= 1e-12 * std::max(1.0, state.params.u_tau)) break;
      }
      rep.points = 0;
      rep.iterations = taken;
      rep.u_tau = state.params.u_tau;
      u_model.reserve(y_ref.size());
      for (double y : y_ref) {
        u_model.push_back(
            iwm::composite_profile(state.params, h, nu, y, constants).first);
      }
      break;
    }
  }

  rep.tau_w_rel_error = std::abs(rep.u_tau * rep.u_tau - 1.0);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < y_ref.size(); ++i) {
    num += (u_model[i] - u_ref[i]) * (u_model[i] - u_ref[i]);
    den += u_ref[i] * u_ref[i];
  }
  rep.profile_l2_error = std::sqrt(num / den);
  return rep;
}

std::string apriori_csv(const std::vector<AprioriReport>& reports) {
  std::string out =
      "model,re_tau,h_wm_over_delta,points,u_tau,tau_w_rel_error,"
      "profile_l2_error,iterations\n";
  for (const AprioriReport& r : reports) {
    out += model_name(r.model);
    out += ',';
    append_num(out, r.re_tau);
    out += ',';
    append_num(out, r.h_wm_over_delta);
    out += ',' + std::to_string(r.points) + ',';
    append_num(out, r.u_tau);
    out += ',';
    append_num(out, r.tau_w_rel_error);
    out += ',';
    append_num(out, r.profile_l2_error);
    out += ',' + std::to_string(r.iterations) + '\n';
  }
  return out;
}

const std::array<const char*, 6>& coupled_stage_names() {
  static const std::array<const char*, 6> names = {
      "publish_stress", "broadcast", "gradients",
      "outer_update",   "interpolate", "advance"};
  return names;
}

CoupledResult run_coupled_loop(const CoupledConfig& config) {
  config.validate();
  return run_coupled_loop(config, surface::generate_scenario(config.scenario));
}

CoupledResult run_coupled_loop(const CoupledConfig& config,
                               const surface::Scenario& scenario) {
  config.validate();
  const surface::SurfaceMesh& mesh = scenario.mesh;
  const size_t n_faces = mesh.wall_faces.size();
  if (n_faces == 0) fail("coupled loop needs wall faces");

  const eqwm::ClosureConstants constants{};
  const double h = mesh.matching_height;
  const double nu = config.nu;
  const double rho = config.rho;

  iwm::IwmOptions options;
  options.legacy_sublayer = config.legacy_sublayer;

  surface::GradientOptions grad_options;
  grad_options.global_vector = config.global_vector_gradients;

  const surface::FaceCellMap map = surface::build_face_cell_map(mesh);

  // Prescribed outer flow, global frame. The sine pattern is steady in time;
  // the pulse rides on the uniform flow as a pressure-gradient window.
  auto outer_speed = [&](const surface::WallFace& face) {
    if (config.flow == OuterFlowKind::StreamwiseSine) {
      return config.u0 + config.amplitude *
                             std::sin(2.0 * kPi * face.centroid[0] / config.wavelength);
    }
    return config.u0;
  };
  auto outer_dpdx = [&](int step) {
    if (config.flow != OuterFlowKind::ImpulsivePressurePulse) return 0.0;
    const bool active =
        step >= config.pulse_start && step < config.pulse_start + config.pulse_duration;
    return active ? config.amplitude : 0.0;
  };

  CoupledResult result;
  result.csv =
      "step,time,face,u_tau,tau_w_x,tau_w_z,tau_global_x,tau_global_z,"
      "l_x,l_z,a_x,a_z,newton_iters,fallback\n";
  result.stage_log.reserve(static_cast<size_t>(config.steps) * 6);

  std::vector<iwm::IwmFaceState> states;
  states.reserve(n_faces);
  for (const surface::WallFace& face : mesh.wall_faces) {
    const double u = outer_speed(face);
    const double u_les = u * face.local_x[0];
    const double w_les = u * face.local_z[0];
    states.push_back(
        iwm::init_plug_flow(u_les, w_les, h, nu, rho, constants, options));
  }

  std::vector<double> vx(n_faces), vz(n_faces), vxx(n_faces), vzz(n_faces), vxz(n_faces);
  std::vector<iwm::IntegralGradients> grads(n_faces);

  int step = 0;
  auto run_stage = [&](const char* name, auto&& body) {
    result.stage_log.emplace_back(name);
    try {
      body();
    } catch (const std::exception& e) {
      throw std::runtime_error("coupled loop step " + std::to_string(step) +
                               " stage '" + name + "': " + e.what());
    }
  };

  for (step = 0; step < config.steps; ++step) {
    run_stage("publish_stress", [&] {
      double spread = 0.0;
      auto track = [&](auto member) {
        double lo = states[0].*member, hi = lo;
        for (const auto& s : states) {
          lo = std::min(lo, s.*member);
          hi = std::max(hi, s.*member);
        }
        spread = std::max(spread, hi - lo);
      };
      track(&iwm::IwmFaceState::tau_w_x);
      track(&iwm::IwmFaceState::tau_w_z);
      double lo_ut = states[0].params.u_tau, hi_ut = lo_ut;
      double lo_lx = states[0].integrals.l_x, hi_lx = lo_lx;
      double lo_lz = states[0].integrals.l_z, hi_lz = lo_lz;
      double lo_ax = states[0].params.a_x, hi_ax = lo_ax;
      for (const auto& s : states) {
        lo_ut = std::min(lo_ut, s.params.u_tau);
        hi_ut = std::max(hi_ut, s.params.u_tau);
        lo_lx = std::min(lo_lx, s.integrals.l_x);
        hi_lx = std::max(hi_lx, s.integrals.l_x);
        lo_lz = std::min(lo_lz, s.integrals.l_z);
        hi_lz = std::max(hi_lz, s.integrals.l_z);
        lo_ax = std::min(lo_ax, s.params.a_x);
        hi_ax = std::max(hi_ax, s.params.a_x);
      }
      spread = std::max({spread, hi_ut - lo_ut, hi_lx - lo_lx, hi_lz - lo_lz,
                         hi_ax - lo_ax});
      result.max_face_spread = std::max(result.max_face_spread, spread);

      for (size_t f = 0; f < n_faces; ++f) {
        const iwm::IwmFaceState& s = states[f];
        const surface::WallFace& face = mesh.wall_faces[f];
        const double tgx =
            s.tau_w_x * face.local_x[0] + s.tau_w_z * face.local_z[0];
        const double tgz =
            s.tau_w_x * face.local_x[2] + s.tau_w_z * face.local_z[2];
        result.csv += std::to_string(step) + ',';
        append_num(result.csv, s.time);
        result.csv += ',' + std::to_string(static_cast<int>(f)) + ',';
        append_num(result.csv, s.params.u_tau);
        result.csv += ',';
        append_num(result.csv, s.tau_w_x);
        result.csv += ',';
        append_num(result.csv, s.tau_w_z);
        result.csv += ',';
        append_num(result.csv, tgx);
        result.csv += ',';
        append_num(result.csv, tgz);
        result.csv += ',';
        append_num(result.csv, s.integrals.l_x);
        result.csv += ',';
        append_num(result.csv, s.integrals.l_z);
        result.csv += ',';
        append_num(result.csv, s.params.a_x);
        result.csv += ',';
        append_num(result.csv, s.params.a_z);
        result.csv += ',' + std::to_string(s.newton_iters) + ',' +
                      (s.fallback_used ? "1" : "0") + '\n';
      }
    });

    run_stage("broadcast", [&] {
      for (size_t f = 0; f < n_faces; ++f) {
        vx[f] = states[f].integrals.l_x;
        vz[f] = states[f].integrals.l_z;
        vxx[f] = states[f].integrals.l_xx;
        vzz[f] = states[f].integrals.l_zz;
        vxz[f] = states[f].integrals.l_xz;
      }
      result.gradient_source_integrals.assign(n_faces, {});
      for (size_t f = 0; f < n_faces; ++f) {
        result.gradient_source_integrals[f] = states[f].integrals;
      }
    });

    run_stage("gradients", [&] {
      surface::WallFieldBundle bundle{
          surface::WallScalarField(vx, surface::FrameTag::LocalX),
          surface::WallScalarField(vz, surface::FrameTag::LocalZ),
          surface::WallScalarField(vxx, surface::FrameTag::FrameFree),
          surface::WallScalarField(vzz, surface::FrameTag::FrameFree),
          surface::WallScalarField(vxz, surface::FrameTag::FrameFree)};
      grads = surface::surface_gradients(bundle, mesh, map, grad_options);
      if (config.filter_passes > 0) {
        grads = surface::spatial_filter(grads, mesh, config.filter_passes);
      }
      for (const iwm::IntegralGradients& g : grads) {
        for (auto slot : kGradSlots) {
          result.max_gradient_magnitude =
              std::max(result.max_gradient_magnitude, std::abs(g.*slot));
        }
      }
    });

    double dpdx_global = 0.0;
    run_stage("outer_update", [&] { dpdx_global = outer_dpdx(step); });

    std::vector<iwm::MatchingData> matches(n_faces);
    run_stage("interpolate", [&] {
      for (size_t f = 0; f < n_faces; ++f) {
        const surface::WallFace& face = mesh.wall_faces[f];
        const double u = outer_speed(face);
        iwm::MatchingData md;
        md.u_les = u * face.local_x[0];
        md.w_les = u * face.local_z[0];
        md.dpdx = dpdx_global * face.local_x[0];
        md.dpdz = dpdx_global * face.local_z[0];
        md.grad_terms = grads[f];
        md.dt = config.dt;
        matches[f] = md;
      }
    });

    run_stage("advance", [&] {
      for (size_t f = 0; f < n_faces; ++f) {
        states[f] =
            iwm::advance_face(states[f], matches[f], h, nu, rho, constants, options);
      }
    });
  }

  result.final_states = states;
  result.final_gradients = grads;

  result.checkpoint_csv =
      "face,u_tau,u_tau_x,u_tau_z,a_x,a_z,c_x,c_z,delta_i,viscous_only,"
      "l_x,l_z,l_xx,l_zz,l_xz,tau_w_x,tau_w_z,tau_h_x,tau_h_z,time,"
      "newton_iters,fallback\n";
  for (size_t f = 0; f < n_faces; ++f) {
    const iwm::IwmFaceState& s = states[f];
    std::string& out = result.checkpoint_csv;
    out += std::to_string(static_cast<int>(f)) + ',';
    for (double v : {s.params.u_tau, s.params.u_tau_x, s.params.u_tau_z,
                     s.params.a_x, s.params.a_z, s.params.c_x, s.params.c_z,
                     s.params.delta_i}) {
      append_num(out, v);
      out += ',';
    }
    out += (s.params.viscous_only ? "1," : "0,");
    for (double v : {s.integrals.l_x, s.integrals.l_z, s.integrals.l_xx,
                     s.integrals.l_zz, s.integrals.l_xz, s.tau_w_x, s.tau_w_z,
                     s.tau_h_x, s.tau_h_z, s.time}) {
      append_num(out, v);
      out += ',';
    }
    out += std::to_string(s.newton_iters) + ',' + (s.fallback_used ? "1" : "0") + '\n';
  }
  return result;
}

std::vector<BenchRecord> run_benchmarks(const BenchConfig& config) {
  if (config.cases.empty()) fail("benchmark sweep is empty");
  if (config.repetitions < 1) fail("benchmark needs at least one repetition");
  if (config.warmups < 0) fail("benchmark warmup count must be nonnegative");

  const eqwm::ClosureConstants constants{};
  std::map<std::pair<int, double>, double> tau_reference;

  auto reference_tau = [&](ModelKind model, double re_tau) {
    const auto key = std::make_pair(static_cast<int>(model), re_tau);
    auto it = tau_reference.find(key);
    if (it != tau_reference.end()) return it->second;
    const eqwm::WallModelInput in = eqwm::synthetic_channel_input(re_tau, constants);
    double tau = 0.0;
    if (model == ModelKind::FiniteVolume) {
      const eqwm::FvGrid grid = eqwm::make_fv_grid(2048, in.h_wm, in.nu);
      tau = eqwm::solve_utau_fv(in, grid, constants, 1e-10, 500).tau_w;
    } else {
      tau = eqwm::solve_utau_spectral(in, 512, to_domain_map(model), constants).tau_w;
    }
    tau_reference[key] = tau;
    return tau;
  };

  std::vector<BenchRecord> records;
  records.reserve(config.cases.size());
  for (const BenchCase& bc : config.cases) {
    to_eqwm_method(bc.model);  // rejects integral models
    if (bc.n < 2) fail("benchmark point count must be at least 2");
    if (!(bc.re_tau > 0.0)) fail("benchmark re_tau must be positive");

    const eqwm::WallModelInput in = eqwm::synthetic_channel_input(bc.re_tau, constants);
    const double tau_ref = reference_tau(bc.model, bc.re_tau);

    eqwm::FvGrid grid;
    if (bc.model == ModelKind::FiniteVolume) {
      grid = eqwm::make_fv_grid(bc.n, in.h_wm, in.nu);
    }
    auto solve_once = [&](eqwm::WorkCounters* wk) {
      if (bc.model == ModelKind::FiniteVolume) {
        return eqwm::solve_utau_fv(in, grid, constants, 1e-6, 200, false, wk);
      }
      return eqwm::solve_utau_spectral(in, bc.n, to_domain_map(bc.model), constants,
                                       0.0, 100, wk);
    };

    for (int i = 0; i < config.warmups; ++i) solve_once(nullptr);

    std::vector<double> times_ns(config.repetitions);
    eqwm::EqwmSolution sol;
    eqwm::WorkCounters wk;
    for (int i = 0; i < config.repetitions; ++i) {
      wk = {};
      const auto t0 = std::chrono::steady_clock::now();
      sol = solve_once(&wk);
      const auto t1 = std::chrono::steady_clock::now();
      times_ns[i] =
          std::chrono::duration<double, std::nano>(t1 - t0).count();
    }
    std::sort(times_ns.begin(), times_ns.end());
    const size_t m = times_ns.size();
    const double median = (m % 2 == 1)
                              ? times_ns[m / 2]
                              : 0.5 * (times_ns[m / 2 - 1] + times_ns[m / 2]);
    const double iqr = times_ns[(3 * m) / 4] - times_ns[m / 4];

    BenchRecord rec;
    rec.model = bc.model;
    rec.re_tau = bc.re_tau;
    rec.n = bc.n;
    rec.tau_w_rel_error = std::abs(sol.tau_w - tau_ref) / tau_ref;
    if (bc.model == ModelKind::FiniteVolume) {
      rec.work = wk.sweep_ops;
      rec.iters = wk.sweeps;
    } else {
      rec.work = wk.integrand_evals;
      rec.iters = wk.residual_evals;
    }
    rec.wall_ns_median = median;
    rec.wall_ns_iqr = iqr;
    records.push_back(rec);
  }
  return records;
}

std::string benchmark_csv(const std::vector<BenchRecord>& records, bool include_timing) {
  std::string out = "model,re_tau,n,tau_w_rel_error,work,iters";
  if (include_timing) out += ",wall_ns_median,wall_ns_iqr";
  out += '\n';
  for (const BenchRecord& r : records) {
    out += model_name(r.model);
    out += ',';
    append_num(out, r.re_tau);
    out += ',' + std::to_string(r.n) + ',';
    append_num(out, r.tau_w_rel_error);
    out += ',' + std::to_string(r.work) + ',' + std::to_string(r.iters);
    if (include_timing) {
      out += ',';
      append_num(out, r.wall_ns_median);
      out += ',';
      append_num(out, r.wall_ns_iqr);
    }
    out += '\n';
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    fail("slope fit needs matching arrays of at least 2 points");
  }
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail("slope fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  if (den == 0.0) fail("slope fit needs distinct abscissae");
  return num / den;
}

GradientTestReport run_gradient_test(surface::ScenarioKind kind, bool global_vector,
                                     int filter_passes) {
  if (filter_passes < 0) fail("filter pass count must be nonnegative");
  const surface::Scenario scenario = surface::generate_scenario(kind);
  const surface::FaceCellMap map = surface::build_face_cell_map(scenario.mesh);
  surface::GradientOptions opts;
  opts.global_vector = global_vector;
  const auto grads = surface::surface_gradients(scenario.fields, scenario.mesh, map, opts);

  GradientTestReport rep;
  rep.scenario = kind;
  rep.global_vector = global_vector;
  rep.filter_passes = filter_passes;

  std::vector<char> checked(grads.size(), 0);
  for (int f : scenario.exact_faces) checked[f] = 1;
  if (kind == surface::ScenarioKind::RotatedJuncture) {
    for (int f : scenario.juncture_faces) checked[f] = 1;
  }

  rep.csv = "face,rel_error,checked,defect\n";
  for (size_t f = 0; f < grads.size(); ++f) {
    const double err = bundle_worst_error(grads[f], scenario.analytic[f]);
    if (checked[f]) {
      ++rep.checked_faces;
      rep.worst_rel_error = std::max(rep.worst_rel_error, err);
    }
    rep.csv += std::to_string(static_cast<int>(f)) + ',';
    append_num(rep.csv, err);
    rep.csv += ',';
    rep.csv += checked[f] ? '1' : '0';
    rep.csv += ',';
    rep.csv += static_cast<int>(f) == scenario.defect_face ? '1' : '0';
    rep.csv += '\n';
  }

  bool defect_recovered = true;
  if (kind == surface::ScenarioKind::TetFan) {
    defect_recovered = false;
    if (filter_passes > 0) {
      const auto filtered =
          surface::spatial_filter(grads, scenario.mesh, filter_passes);
      const double target = scenario.analytic[scenario.defect_face].dlx_dx;
      rep.filtered_recovery_error =
          std::abs(filtered[scenario.defect_face].dlx_dx - target) / std::abs(target);
      defect_recovered = rep.filtered_recovery_error <= 0.30;
    }
  }
  rep.pass = rep.worst_rel_error <= 1e-8 && defect_recovered;
  return rep;
}

}  // namespace gfwm::harness
