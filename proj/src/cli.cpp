#include "gfwm/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfwm/drivers.hpp"
#include "gfwm/profile_data.hpp"
#include "gfwm/quadrature.hpp"
#include "gfwm/surface.hpp"

namespace gfwm::cli {

namespace {

using namespace gfwm::harness;

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

surface::ScenarioKind parse_scenario(const std::string& name) {
  if (name == "uniform-hex") return surface::ScenarioKind::UniformHex;
  if (name == "rotated-juncture") return surface::ScenarioKind::RotatedJuncture;
  return surface::ScenarioKind::TetFan;  // option check admits only the three
}

// Writes text byte-exact and returns the final path. Creates the directory.
std::string write_csv(const std::string& dir, const std::string& name,
                      const std::string& text) {
  namespace fs = std::filesystem;
  fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + p.string());
  p /= name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return p.string();
}

struct QuadtableArgs {
  int q = 8;
  std::string map;  // empty: reference interval
  double h = 1.0;
  std::string out;  // empty: stdout only
};

int run_quadtable(const QuadtableArgs& a, const std::string& out_dir) {
  const auto rule = quad::gll_rule_cached(a.q);
  std::string csv;
  if (a.map.empty()) {
    csv = "index,node,weight\n";
    for (int i = 0; i < rule->q; ++i) {
      csv += std::to_string(i);
      csv += ',';
      append_num(csv, rule->nodes[i]);
      csv += ',';
      append_num(csv, rule->weights[i]);
      csv += '\n';
    }
  } else {
    const quad::DomainMap m = a.map == "linear" ? quad::DomainMap::Linear
                                                : quad::DomainMap::Clustered;
    const quad::MappedRule mapped = quad::map_to_physical(*rule, m, a.h);
    csv = "index,y,weight\n";
    for (int i = 0; i < mapped.q; ++i) {
      csv += std::to_string(i);
      csv += ',';
      append_num(csv, mapped.y[i]);
      csv += ',';
      append_num(csv, mapped.w[i]);
      csv += '\n';
    }
  }
  std::fputs(csv.c_str(), stdout);
  if (!a.out.empty())
    std::printf("wrote %s\n", write_csv(out_dir, a.out, csv).c_str());
  return 0;
}

struct AprioriArgs {
  std::string model = "gq-clustered";  // or "all"
  double re_tau = 1000.0;
  double h = 0.1;
  int points = 0;
  double dt = 0.01;
  int steps = 0;
  std::string profile_path;  // empty: synthesize at re_tau
  std::string format = "y-plus";
  int samples = 200;
};

int run_apriori_cmd(const AprioriArgs& a, const std::string& out_dir) {
  const ProfileFormat fmt = a.format == "y-plus" ? ProfileFormat::YPlusUPlus
                                                 : ProfileFormat::YOverDeltaUPlus;
  ReferenceProfile prof;
  if (a.profile_path.empty()) {
    prof = ingest_profile(synthetic_profile_text(a.re_tau, a.samples, fmt), fmt,
                          a.re_tau, "synthetic");
  } else {
    prof = ingest_profile_file(a.profile_path, fmt, a.re_tau);
  }

  std::vector<ModelKind> models;
  if (a.model == "all") {
    models = {ModelKind::FiniteVolume, ModelKind::SpectralLinear,
              ModelKind::SpectralClustered, ModelKind::Integral,
              ModelKind::IntegralLegacy};
  } else {
    models = {parse_model(a.model)};
  }

  std::vector<AprioriReport> reports;
  for (ModelKind m : models) {
    DriverConfig cfg;
    cfg.model = m;
    cfg.re_tau = a.re_tau;
    cfg.h_wm_over_delta = a.h;
    cfg.points = a.points;
    cfg.dt = a.dt;
    cfg.steps = a.steps;
    reports.push_back(run_apriori(cfg, prof));
  }
  const std::string csv = apriori_csv(reports);
  std::fputs(csv.c_str(), stdout);
  std::printf("wrote %s\n", write_csv(out_dir, "apriori.csv", csv).c_str());
  return 0;
}

struct BenchArgs {
  std::string model = "gq-clustered";
  std::vector<double> re_taus{1000.0};
  std::vector<int> ns{16};
  int reps = 100;
  int warmups = 10;
  bool no_timing = false;
};

int run_bench_cmd(const BenchArgs& a, const std::string& out_dir) {
  BenchConfig bc;
  bc.repetitions = a.reps;
  bc.warmups = a.warmups;
  const ModelKind model = parse_model(a.model);
  for (double re : a.re_taus)
    for (int n : a.ns) bc.cases.push_back({model, re, n});
  const std::vector<BenchRecord> recs = run_benchmarks(bc);
  const std::string csv = benchmark_csv(recs, !a.no_timing);
  std::fputs(csv.c_str(), stdout);
  std::printf("wrote %s\n", write_csv(out_dir, "bench.csv", csv).c_str());
  return 0;
}

struct CoupledArgs {
  std::string scenario = "uniform-hex";
  std::string flow = "steady";
  int steps = 100;
  double dt = 0.01;
  double u0 = 16.5;
  double amplitude = 0.0;
  double wavelength = 2.0;
  int pulse_start = 10;
  int pulse_duration = 5;
  double nu = 1e-3;
  double rho = 1.0;
  std::string mode = "global-vector";
  int filter_passes = 0;
  bool legacy = false;
};

int run_coupled_cmd(const CoupledArgs& a, const std::string& out_dir) {
  CoupledConfig cc;
  cc.scenario = parse_scenario(a.scenario);
  cc.flow = parse_outer_flow(a.flow);
  cc.steps = a.steps;
  cc.dt = a.dt;
  cc.u0 = a.u0;
  cc.amplitude = a.amplitude;
  cc.wavelength = a.wavelength;
  cc.pulse_start = a.pulse_start;
  cc.pulse_duration = a.pulse_duration;
  cc.nu = a.nu;
  cc.rho = a.rho;
  cc.global_vector_gradients = a.mode == "global-vector";
  cc.filter_passes = a.filter_passes;
  cc.legacy_sublayer = a.legacy;
  const CoupledResult r = run_coupled_loop(cc);
  std::printf("faces=%zu steps=%d max_face_spread=%.6g max_gradient_magnitude=%.6g\n",
              r.final_states.size(), a.steps, r.max_face_spread,
              r.max_gradient_magnitude);
  std::printf("wrote %s\n",
              write_csv(out_dir, "coupled_timeseries.csv", r.csv).c_str());
  std::printf("wrote %s\n",
              write_csv(out_dir, "coupled_checkpoint.csv", r.checkpoint_csv).c_str());
  return 0;
}

struct GradtestArgs {
  std::string scenario = "uniform-hex";
  std::string mode = "global-vector";
  int filter_passes = 0;
};

int run_gradtest_cmd(const GradtestArgs& a, const std::string& out_dir) {
  const GradientTestReport rep = run_gradient_test(
      parse_scenario(a.scenario), a.mode == "global-vector", a.filter_passes);
  std::printf("scenario=%s mode=%s filter_passes=%d checked_faces=%d "
              "worst_rel_error=%.6g filtered_recovery_error=%.6g result=%s\n",
              a.scenario.c_str(), a.mode.c_str(), rep.filter_passes,
              rep.checked_faces, rep.worst_rel_error,
              rep.filtered_recovery_error, rep.pass ? "PASS" : "FAIL");
  std::printf("wrote %s\n", write_csv(out_dir, "gradtest.csv", rep.csv).c_str());
  return rep.pass ? 0 : 1;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"wall-model toolkit: quadrature tables, a priori validation, "
               "coupled wall-model runs, cost benchmarks, gradient checks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  app.set_config("--config", "",
                 "key = value file filling options the command line leaves "
                 "unset; subcommand options go under a [subcommand] section");

  std::string out_dir = ".";
  app.add_option("--output-dir", out_dir, "directory for CSV outputs")
      ->envname("GFWM_OUTPUT_DIR");

  QuadtableArgs qa;
  CLI::App* quadtable =
      app.add_subcommand("quadtable", "print quadrature nodes and weights as CSV");
  quadtable->add_option("--q", qa.q, "number of points")->check(CLI::Range(2, 4096));
  quadtable->add_option("--map", qa.map, "map onto [0, h] instead of [-1, 1]")
      ->check(CLI::IsMember({"linear", "clustered"}));
  quadtable->add_option("--height", qa.h, "layer height for --map");
  quadtable->add_option("--out", qa.out, "also write the table to this file");

  AprioriArgs aa;
  CLI::App* apriori = app.add_subcommand(
      "apriori", "wall-stress prediction against a reference profile");
  apriori->add_option("--model", aa.model, "model to evaluate, or 'all'")
      ->check(CLI::IsMember(
          {"fv", "gq-linear", "gq-clustered", "iwm", "iwm-legacy", "all"}));
  apriori->add_option("--retau", aa.re_tau, "friction Reynolds number");
  apriori->add_option("--height", aa.h, "matching height as a fraction of delta");
  apriori->add_option("--points", aa.points,
                      "quadrature size or cell count; 0 selects automatically");
  apriori->add_option("--dt", aa.dt, "integral-model march step");
  apriori->add_option("--steps", aa.steps, "integral-model march cap; 0 = default");
  apriori->add_option("--profile", aa.profile_path,
                      "reference profile table; omitted: synthesize one")
      ->check(CLI::ExistingFile);
  apriori->add_option("--format", aa.format, "profile ordinate units")
      ->check(CLI::IsMember({"y-plus", "y-over-delta"}));
  apriori->add_option("--samples", aa.samples, "rows in the synthesized profile");

  BenchArgs ba;
  CLI::App* bench =
      app.add_subcommand("bench", "instrumented cost sweep with CSV output");
  bench->add_option("--model", ba.model, "swept model")
      ->check(CLI::IsMember({"fv", "gq-linear", "gq-clustered"}));
  bench->add_option("--retau", ba.re_taus, "friction Reynolds numbers");
  bench->add_option("--n", ba.ns, "point counts");
  bench->add_option("--reps", ba.reps, "timed repetitions per case");
  bench->add_option("--warmups", ba.warmups, "untimed solves per case");
  bench->add_flag("--no-timing", ba.no_timing,
                  "suppress wall-time columns for bit-stable output");

  CoupledArgs ca;
  CLI::App* coupled = app.add_subcommand(
      "coupled", "synchronized wall-model loop against a prescribed outer flow");
  coupled->add_option("--scenario", ca.scenario, "wall mesh scenario")
      ->check(CLI::IsMember({"uniform-hex", "rotated-juncture", "tet-fan"}));
  coupled->add_option("--flow", ca.flow, "outer flow kind")
      ->check(CLI::IsMember({"steady", "sine", "pulse"}));
  coupled->add_option("--steps", ca.steps, "loop steps");
  coupled->add_option("--dt", ca.dt, "time step");
  coupled->add_option("--u0", ca.u0, "outer speed along x");
  coupled->add_option("--amplitude", ca.amplitude,
                      "sine speed modulation or pulse pressure gradient");
  coupled->add_option("--wavelength", ca.wavelength, "sine wavelength along x");
  coupled->add_option("--pulse-start", ca.pulse_start, "first pulsed step");
  coupled->add_option("--pulse-duration", ca.pulse_duration, "pulsed step count");
  coupled->add_option("--nu", ca.nu, "kinematic viscosity");
  coupled->add_option("--rho", ca.rho, "density");
  coupled->add_option("--mode", ca.mode, "gradient carrier mode")
      ->check(CLI::IsMember({"naive", "global-vector"}));
  coupled->add_option("--filter-passes", ca.filter_passes,
                      "smoothing passes on the broadcast fields");
  coupled->add_flag("--legacy", ca.legacy,
                    "publish the equal-component wall-stress extraction");

  GradtestArgs ga;
  CLI::App* gradtest = app.add_subcommand(
      "gradtest", "gradient pipeline check against the analytic reference");
  gradtest->add_option("--scenario", ga.scenario, "wall mesh scenario")
      ->check(CLI::IsMember({"uniform-hex", "rotated-juncture", "tet-fan"}));
  gradtest->add_option("--mode", ga.mode, "gradient carrier mode")
      ->check(CLI::IsMember({"naive", "global-vector"}));
  gradtest->add_option("--filter-passes", ga.filter_passes,
                       "smoothing passes before the wide-face recovery check");

  int rc = 0;
  quadtable->callback([&] { rc = run_quadtable(qa, out_dir); });
  apriori->callback([&] { rc = run_apriori_cmd(aa, out_dir); });
  bench->callback([&] { rc = run_bench_cmd(ba, out_dir); });
  coupled->callback([&] { rc = run_coupled_cmd(ca, out_dir); });
  gradtest->callback([&] { rc = run_gradtest_cmd(ga, out_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}

int dispatch(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("gfwm");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> ptrs;
  ptrs.reserve(full.size());
  for (const std::string& s : full) ptrs.push_back(s.c_str());
  return dispatch(static_cast<int>(ptrs.size()), ptrs.data());
}

}  // namespace gfwm::cli
