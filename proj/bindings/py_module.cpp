#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdio>

#include "gfwm/cli.hpp"
#include "gfwm/drivers.hpp"
#include "gfwm/eqwm.hpp"
#include "gfwm/iwm.hpp"
#include "gfwm/profile_data.hpp"
#include "gfwm/quadrature.hpp"
#include "gfwm/surface.hpp"

namespace py = pybind11;

using namespace gfwm;
using namespace gfwm::harness;

PYBIND11_MODULE(_core, m) {
  m.doc() = "wall-model toolkit: equilibrium and integral wall models, "
            "unstructured-surface gradients, validation drivers";

  py::enum_<quad::DomainMap>(m, "DomainMap")
      .value("Linear", quad::DomainMap::Linear)
      .value("Clustered", quad::DomainMap::Clustered);

  py::enum_<eqwm::Method>(m, "Method")
      .value("SpectralLinear", eqwm::Method::SpectralLinear)
      .value("SpectralClustered", eqwm::Method::SpectralClustered)
      .value("FiniteVolume", eqwm::Method::FiniteVolume);

  py::enum_<ProfileFormat>(m, "ProfileFormat")
      .value("YPlusUPlus", ProfileFormat::YPlusUPlus)
      .value("YOverDeltaUPlus", ProfileFormat::YOverDeltaUPlus);

  py::enum_<ModelKind>(m, "ModelKind")
      .value("FiniteVolume", ModelKind::FiniteVolume)
      .value("SpectralLinear", ModelKind::SpectralLinear)
      .value("SpectralClustered", ModelKind::SpectralClustered)
      .value("Integral", ModelKind::Integral)
      .value("IntegralLegacy", ModelKind::IntegralLegacy);

  py::enum_<OuterFlowKind>(m, "OuterFlowKind")
      .value("SteadyUniform", OuterFlowKind::SteadyUniform)
      .value("StreamwiseSine", OuterFlowKind::StreamwiseSine)
      .value("ImpulsivePressurePulse", OuterFlowKind::ImpulsivePressurePulse);

  py::enum_<surface::ScenarioKind>(m, "ScenarioKind")
      .value("UniformHex", surface::ScenarioKind::UniformHex)
      .value("RotatedJuncture", surface::ScenarioKind::RotatedJuncture)
      .value("TetFan", surface::ScenarioKind::TetFan);

  m.def(
      "gll_rule",
      [](int q) {
        const auto r = quad::gll_rule_cached(q);
        return py::make_tuple(r->nodes, r->weights);
      },
      py::arg("q"), "nodes and weights on [-1, 1]");
  m.def(
      "mapped_rule",
      [](int q, quad::DomainMap map, double h) {
        const auto r = quad::gll_rule_cached(q);
        const quad::MappedRule mr = quad::map_to_physical(*r, map, h);
        return py::make_tuple(mr.y, mr.w);
      },
      py::arg("q"), py::arg("map"), py::arg("h"),
      "nodes and jacobian-scaled weights on [0, h]");

  py::class_<eqwm::EqwmSolution>(m, "EquilibriumSolution")
      .def_readonly("u_tau", &eqwm::EqwmSolution::u_tau)
      .def_readonly("tau_w", &eqwm::EqwmSolution::tau_w)
      .def_readonly("points", &eqwm::EqwmSolution::points)
      .def_readonly("iterations", &eqwm::EqwmSolution::iterations)
      .def_readonly("residual", &eqwm::EqwmSolution::residual)
      .def_readonly("method", &eqwm::EqwmSolution::method);

  m.def(
      "solve_equilibrium",
      [](double u_les, double h_wm, double nu, double rho, int points,
         eqwm::Method method) {
        eqwm::WallModelInput in;
        in.u_les = u_les;
        in.h_wm = h_wm;
        in.nu = nu;
        in.rho = rho;
        if (method == eqwm::Method::FiniteVolume) {
          return eqwm::solve_utau_fv(in, eqwm::make_fv_grid(points, h_wm, nu));
        }
        const quad::DomainMap map = method == eqwm::Method::SpectralLinear
                                        ? quad::DomainMap::Linear
                                        : quad::DomainMap::Clustered;
        return eqwm::solve_utau_spectral(in, points, map);
      },
      py::arg("u_les"), py::arg("h_wm"), py::arg("nu"), py::arg("rho") = 1.0,
      py::arg("points") = 64,
      py::arg("method") = eqwm::Method::SpectralClustered,
      "friction velocity from the matching velocity at h_wm");

  m.def(
      "optimal_point_count",
      [](double re_tau, eqwm::Method method, double error_target) {
        const eqwm::OptimalCount oc =
            eqwm::optimal_point_count(re_tau, method, error_target);
        return py::make_tuple(oc.count, oc.saturated, oc.achieved_error);
      },
      py::arg("re_tau"), py::arg("method"), py::arg("error_target") = 0.005,
      "(count, saturated, achieved_error) reaching the error target");

  py::class_<iwm::IwmParams>(m, "IwmParams")
      .def_readonly("u_tau", &iwm::IwmParams::u_tau)
      .def_readonly("u_tau_x", &iwm::IwmParams::u_tau_x)
      .def_readonly("u_tau_z", &iwm::IwmParams::u_tau_z)
      .def_readonly("a_x", &iwm::IwmParams::a_x)
      .def_readonly("a_z", &iwm::IwmParams::a_z)
      .def_readonly("c_x", &iwm::IwmParams::c_x)
      .def_readonly("c_z", &iwm::IwmParams::c_z)
      .def_readonly("delta_i", &iwm::IwmParams::delta_i)
      .def_readonly("viscous_only", &iwm::IwmParams::viscous_only);

  py::class_<iwm::IntegralTerms>(m, "IntegralTerms")
      .def_readonly("l_x", &iwm::IntegralTerms::l_x)
      .def_readonly("l_z", &iwm::IntegralTerms::l_z)
      .def_readonly("l_xx", &iwm::IntegralTerms::l_xx)
      .def_readonly("l_zz", &iwm::IntegralTerms::l_zz)
      .def_readonly("l_xz", &iwm::IntegralTerms::l_xz);

  py::class_<iwm::IwmFaceState>(m, "IwmFaceState")
      .def_readonly("params", &iwm::IwmFaceState::params)
      .def_readonly("integrals", &iwm::IwmFaceState::integrals)
      .def_readonly("tau_w_x", &iwm::IwmFaceState::tau_w_x)
      .def_readonly("tau_w_z", &iwm::IwmFaceState::tau_w_z)
      .def_readonly("tau_h_x", &iwm::IwmFaceState::tau_h_x)
      .def_readonly("tau_h_z", &iwm::IwmFaceState::tau_h_z)
      .def_readonly("time", &iwm::IwmFaceState::time)
      .def_readonly("newton_iters", &iwm::IwmFaceState::newton_iters)
      .def_readonly("fallback_used", &iwm::IwmFaceState::fallback_used);

  m.def(
      "solve_steady",
      [](double u_les, double w_les, double dpdx, double dpdz, double h_wm,
         double nu, double rho, bool legacy_sublayer) {
        iwm::IwmOptions opt;
        opt.legacy_sublayer = legacy_sublayer;
        return iwm::solve_steady(u_les, w_les, dpdx, dpdz, h_wm, nu, rho, {},
                                 opt);
      },
      py::arg("u_les"), py::arg("w_les") = 0.0, py::arg("dpdx") = 0.0,
      py::arg("dpdz") = 0.0, py::arg("h_wm") = 0.1, py::arg("nu") = 1e-3,
      py::arg("rho") = 1.0, py::arg("legacy_sublayer") = false,
      "stationary integral-model state for the given matching data");

  m.def(
      "composite_profile",
      [](const iwm::IwmParams& p, double h_wm, double nu, double y) {
        const auto [u, w] = iwm::composite_profile(p, h_wm, nu, y);
        return py::make_tuple(u, w);
      },
      py::arg("params"), py::arg("h_wm"), py::arg("nu"), py::arg("y"),
      "(u, w) of the modeled layer profile at height y");

  py::class_<ReferenceProfile>(m, "ReferenceProfile")
      .def_readonly("source", &ReferenceProfile::source)
      .def_readonly("re_tau", &ReferenceProfile::re_tau)
      .def_readonly("y_plus", &ReferenceProfile::y_plus)
      .def_readonly("u_plus", &ReferenceProfile::u_plus);

  m.def("ingest_profile", &ingest_profile, py::arg("text"), py::arg("format"),
        py::arg("re_tau"), py::arg("source") = "");
  m.def("ingest_profile_file", &ingest_profile_file, py::arg("path"),
        py::arg("format"), py::arg("re_tau"));
  m.def(
      "synthetic_profile_text",
      [](double re_tau, int n_samples, ProfileFormat format) {
        return synthetic_profile_text(re_tau, n_samples, format);
      },
      py::arg("re_tau"), py::arg("n_samples") = 200,
      py::arg("format") = ProfileFormat::YPlusUPlus);
  m.def("sample_u_plus", &sample_u_plus, py::arg("profile"), py::arg("y_plus"));
  m.def("sample_matching_velocity", &sample_matching_velocity,
        py::arg("profile"), py::arg("h_over_delta"));
  m.def(
      "effective_log_intercept", [] { return effective_log_intercept(); },
      "log-law intercept the closure actually produces");
  m.def(
      "blended_profile_constant", [] { return blended_profile_constant(); });
  m.def(
      "blended_u_plus",
      [](double y_plus, double constant) {
        return blended_u_plus(y_plus, constant);
      },
      py::arg("y_plus"), py::arg("constant"));

  m.def("model_name", &model_name, py::arg("model"));
  m.def("parse_model", &parse_model, py::arg("name"));
  m.def("outer_flow_name", &outer_flow_name, py::arg("kind"));
  m.def("parse_outer_flow", &parse_outer_flow, py::arg("name"));

  py::class_<DriverConfig>(m, "DriverConfig")
      .def(py::init<>())
      .def_readwrite("model", &DriverConfig::model)
      .def_readwrite("re_tau", &DriverConfig::re_tau)
      .def_readwrite("h_wm_over_delta", &DriverConfig::h_wm_over_delta)
      .def_readwrite("points", &DriverConfig::points)
      .def_readwrite("dt", &DriverConfig::dt)
      .def_readwrite("steps", &DriverConfig::steps);

  py::class_<AprioriReport>(m, "AprioriReport")
      .def_readonly("model", &AprioriReport::model)
      .def_readonly("re_tau", &AprioriReport::re_tau)
      .def_readonly("h_wm_over_delta", &AprioriReport::h_wm_over_delta)
      .def_readonly("points", &AprioriReport::points)
      .def_readonly("u_tau", &AprioriReport::u_tau)
      .def_readonly("tau_w_rel_error", &AprioriReport::tau_w_rel_error)
      .def_readonly("profile_l2_error", &AprioriReport::profile_l2_error)
      .def_readonly("iterations", &AprioriReport::iterations);

  m.def("run_apriori", &run_apriori, py::arg("config"), py::arg("profile"));
  m.def("apriori_csv", &apriori_csv, py::arg("reports"));

  py::class_<CoupledConfig>(m, "CoupledConfig")
      .def(py::init<>())
      .def_readwrite("scenario", &CoupledConfig::scenario)
      .def_readwrite("flow", &CoupledConfig::flow)
      .def_readwrite("steps", &CoupledConfig::steps)
      .def_readwrite("dt", &CoupledConfig::dt)
      .def_readwrite("u0", &CoupledConfig::u0)
      .def_readwrite("amplitude", &CoupledConfig::amplitude)
      .def_readwrite("wavelength", &CoupledConfig::wavelength)
      .def_readwrite("pulse_start", &CoupledConfig::pulse_start)
      .def_readwrite("pulse_duration", &CoupledConfig::pulse_duration)
      .def_readwrite("nu", &CoupledConfig::nu)
      .def_readwrite("rho", &CoupledConfig::rho)
      .def_readwrite("global_vector_gradients",
                     &CoupledConfig::global_vector_gradients)
      .def_readwrite("filter_passes", &CoupledConfig::filter_passes)
      .def_readwrite("legacy_sublayer", &CoupledConfig::legacy_sublayer);

  py::class_<CoupledResult>(m, "CoupledResult")
      .def_readonly("csv", &CoupledResult::csv)
      .def_readonly("checkpoint_csv", &CoupledResult::checkpoint_csv)
      .def_readonly("stage_log", &CoupledResult::stage_log)
      .def_readonly("final_states", &CoupledResult::final_states)
      .def_readonly("max_face_spread", &CoupledResult::max_face_spread)
      .def_readonly("max_gradient_magnitude",
                    &CoupledResult::max_gradient_magnitude)
      .def_property_readonly("final_u_tau", [](const CoupledResult& r) {
        std::vector<double> out;
        out.reserve(r.final_states.size());
        for (const auto& st : r.final_states) out.push_back(st.params.u_tau);
        return out;
      });

  m.def(
      "run_coupled_loop",
      [](const CoupledConfig& config) { return run_coupled_loop(config); },
      py::arg("config"));
  m.def("coupled_stage_names", [] {
    std::vector<std::string> names;
    for (const char* n : coupled_stage_names()) names.emplace_back(n);
    return names;
  });

  py::class_<BenchCase>(m, "BenchCase")
      .def(py::init<>())
      .def(py::init([](ModelKind model, double re_tau, int n) {
             BenchCase c;
             c.model = model;
             c.re_tau = re_tau;
             c.n = n;
             return c;
           }),
           py::arg("model"), py::arg("re_tau"), py::arg("n"))
      .def_readwrite("model", &BenchCase::model)
      .def_readwrite("re_tau", &BenchCase::re_tau)
      .def_readwrite("n", &BenchCase::n);

  py::class_<BenchConfig>(m, "BenchConfig")
      .def(py::init<>())
      .def_readwrite("cases", &BenchConfig::cases)
      .def_readwrite("repetitions", &BenchConfig::repetitions)
      .def_readwrite("warmups", &BenchConfig::warmups);

  py::class_<BenchRecord>(m, "BenchRecord")
      .def_readonly("model", &BenchRecord::model)
      .def_readonly("re_tau", &BenchRecord::re_tau)
      .def_readonly("n", &BenchRecord::n)
      .def_readonly("tau_w_rel_error", &BenchRecord::tau_w_rel_error)
      .def_readonly("work", &BenchRecord::work)
      .def_readonly("iters", &BenchRecord::iters)
      .def_readonly("wall_ns_median", &BenchRecord::wall_ns_median)
      .def_readonly("wall_ns_iqr", &BenchRecord::wall_ns_iqr);

  m.def("run_benchmarks", &run_benchmarks, py::arg("config"));
  m.def("benchmark_csv", &benchmark_csv, py::arg("records"),
        py::arg("include_timing") = true);
  m.def("loglog_slope", &loglog_slope, py::arg("x"), py::arg("y"));

  py::class_<GradientTestReport>(m, "GradientTestReport")
      .def_readonly("scenario", &GradientTestReport::scenario)
      .def_readonly("global_vector", &GradientTestReport::global_vector)
      .def_readonly("filter_passes", &GradientTestReport::filter_passes)
      .def_readonly("checked_faces", &GradientTestReport::checked_faces)
      .def_readonly("worst_rel_error", &GradientTestReport::worst_rel_error)
      .def_readonly("filtered_recovery_error",
                    &GradientTestReport::filtered_recovery_error)
      .def_readonly("passed", &GradientTestReport::pass)
      .def_readonly("csv", &GradientTestReport::csv);

  m.def("run_gradient_test", &run_gradient_test, py::arg("scenario"),
        py::arg("global_vector"), py::arg("filter_passes") = 0);

  m.def(
      "cli_main",
      [](const std::vector<std::string>& args) {
        const int rc = cli::dispatch(args);
        // The embedding interpreter may capture and inspect the streams
        // mid-process, so the C buffers cannot wait for process exit.
        std::fflush(stdout);
        std::fflush(stderr);
        return rc;
      },
      py::arg("args"),
      "run a command line in-process; returns the exit code");
}
