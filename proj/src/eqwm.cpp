#include "gfwm/eqwm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gfwm/errors.hpp"

namespace gfwm::eqwm {

void WallModelInput::validate() const {
  if (!(u_les >= 0.0) || !std::isfinite(u_les))
    throw std::invalid_argument("WallModelInput: u_les must be finite and >= 0");
  if (!(h_wm > 0.0)) throw std::invalid_argument("WallModelInput: h_wm must be > 0");
  if (!(nu > 0.0)) throw std::invalid_argument("WallModelInput: nu must be > 0");
  if (!(rho > 0.0)) throw std::invalid_argument("WallModelInput: rho must be > 0");
}

double mixing_length_plus(const double y_plus, const ClosureConstants& c) {
  return c.kappa * y_plus * (1.0 - std::exp(-y_plus / c.a_plus));
}

double velocity_gradient_plus(const double y_plus, const ClosureConstants& c) {
  const double lm = mixing_length_plus(y_plus, c);
  return 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * lm * lm));
}

double shear_integrand(const double y, const double u_tau, const double nu,
                       const ClosureConstants& c) {
  // du/dy = (u_tau^2/nu) du+/dy+ evaluated at y+ = y u_tau / nu
  return u_tau * u_tau / nu * velocity_gradient_plus(y * u_tau / nu, c);
}

namespace {

// Fixed-point guess from the log law; only a seed, accuracy does not matter.
double log_law_seed(const double u, const double h, const double nu,
                    const ClosureConstants& c) {
  double ut = std::max(0.05 * u, nu / h);
  for (int i = 0; i < 25; ++i) {
    const double hp = std::max(h * ut / nu, 1.5);
    ut = u / (std::log(hp) / c.kappa + c.b);
  }
  return ut;
}

double integrate_matching_velocity(const quad::MappedRule& mr, const double u_tau,
                                   const double nu, const ClosureConstants& c,
                                   WorkCounters* wk) {
  double s = 0.0;
  for (int i = 0; i < mr.q; ++i) {
    s += mr.w[i] * shear_integrand(mr.y[i], u_tau, nu, c);
    if (wk) ++wk->integrand_evals;
  }
  return s;
}

void thomas_solve(std::vector<double>& a, std::vector<double>& b, std::vector<double>& cc,
                  std::vector<double>& d, WorkCounters* wk) {
  const int n = static_cast<int>(b.size());
  for (int i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * cc[i - 1];
    d[i] -= m * d[i - 1];
    if (wk) ++wk->sweep_ops;
  }
  d[n - 1] /= b[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    d[i] = (d[i] - cc[i] * d[i + 1]) / b[i];
    if (wk) ++wk->sweep_ops;
  }
}

}  // namespace

EqwmSolution solve_utau_spectral(const WallModelInput& in, const int q,
                                 const quad::DomainMap map, const ClosureConstants& c,
                                 const double tol, const int max_iters, WorkCounters* wk) {
  in.validate();
  if (q < 2) throw std::invalid_argument("solve_utau_spectral: need q >= 2");

  EqwmSolution sol;
  sol.points = q;
  sol.method = (map == quad::DomainMap::Linear) ? Method::SpectralLinear
                                                : Method::SpectralClustered;
  if (in.u_les == 0.0) {
    sol.tau_w = 0.0;
    return sol;
  }

  const auto rule = quad::gll_rule_cached(q);
  const quad::MappedRule mr = quad::map_to_physical(*rule, map, in.h_wm);
  const double tol_abs = (tol > 0.0) ? tol : 1.0e-8 * in.u_les;

  auto residual = [&](const double ut) {
    if (wk) ++wk->residual_evals;
    ++sol.iterations;
    return in.u_les - integrate_matching_velocity(mr, ut, in.nu, c, wk);
  };

  double u0 = log_law_seed(in.u_les, in.h_wm, in.nu, c);
  double f0 = residual(u0);
  if (std::abs(f0) <= tol_abs) {
    sol.u_tau = u0;
    sol.tau_w = in.rho * u0 * u0;
    sol.residual = f0;
    return sol;
  }
  double u1 = 1.1 * u0;
  double f1 = residual(u1);

  while (sol.iterations < max_iters) {
    if (std::abs(f1) <= tol_abs) {
      sol.u_tau = u1;
      sol.tau_w = in.rho * u1 * u1;
      sol.residual = f1;
      return sol;
    }
    const double df = f1 - f0;
    double u2;
    if (df == 0.0) {
      u2 = 0.5 * (u0 + u1);
    } else {
      u2 = u1 - f1 * (u1 - u0) / df;
    }
    if (!(u2 > 0.0)) u2 = 0.5 * u1;  // keep the iterate physical
    u0 = u1;
    f0 = f1;
    u1 = u2;
    f1 = residual(u1);
  }
  if (std::abs(f1) <= tol_abs) {
    sol.u_tau = u1;
    sol.tau_w = in.rho * u1 * u1;
    sol.residual = f1;
    return sol;
  }
  throw ConvergenceError("solve_utau_spectral: secant did not converge", f1, sol.iterations);
}

std::vector<double> FvGrid::centers() const {
  std::vector<double> c(n_cells);
  for (int i = 0; i < n_cells; ++i) c[i] = 0.5 * (faces[i] + faces[i + 1]);
  return c;
}

FvGrid make_fv_grid(const int n_cells, const double h, const double dy1_target) {
  if (n_cells < 2) throw std::invalid_argument("make_fv_grid: need n_cells >= 2");
  if (!(h > 0.0) || !(dy1_target > 0.0))
    throw std::invalid_argument("make_fv_grid: need h > 0 and dy1_target > 0");

  const double ratio_cap = 1.2;
  double dy1 = dy1_target;
  double r = 1.0;

  auto span = [&](const double rr) {
    // sum of dy1 * rr^j, j = 0..n-1
    if (std::abs(rr - 1.0) < 1e-12) return dy1 * n_cells;
    return dy1 * (std::pow(rr, n_cells) - 1.0) / (rr - 1.0);
  };

  if (dy1 * n_cells >= h) {
    // target already finer than uniform; use a uniform grid
    dy1 = h / n_cells;
    r = 1.0;
  } else if (span(ratio_cap) < h) {
    // cannot span even at the cap, grow the first cell instead
    r = ratio_cap;
    dy1 = h * (r - 1.0) / (std::pow(r, n_cells) - 1.0);
  } else {
    double lo = 1.0, hi = ratio_cap;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (span(mid) < h ? lo : hi) = mid;
    }
    r = hi;
  }

  FvGrid g;
  g.n_cells = n_cells;
  g.ratio = r;
  g.faces.resize(n_cells + 1);
  g.faces[0] = 0.0;
  double dy = dy1;
  for (int i = 1; i <= n_cells; ++i) {
    g.faces[i] = g.faces[i - 1] + dy;
    dy *= r;
  }
  g.faces[n_cells] = h;  // absorb accumulated roundoff at the top
  return g;
}

EqwmSolution solve_utau_fv(const WallModelInput& in, const FvGrid& grid,
                           const ClosureConstants& c, const double tol, const int max_iters,
                           const bool laminar_only, WorkCounters* wk,
                           std::vector<double>* cell_velocity) {
  in.validate();
  const int n = grid.n_cells;
  if (n < 2) throw std::invalid_argument("solve_utau_fv: grid has too few cells");
  const double h = grid.faces.back();

  EqwmSolution sol;
  sol.points = n;
  sol.method = Method::FiniteVolume;
  if (in.u_les == 0.0) return sol;

  const std::vector<double> yc = grid.centers();
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = in.u_les * yc[i] / h;  // laminar start

  double u_tau = log_law_seed(in.u_les, h, in.nu, c);
  double tau_prev = in.rho * u_tau * u_tau;

  std::vector<double> lo(n), di(n), up(n), rhs(n);

  for (int sweep = 1; sweep <= max_iters; ++sweep) {
    if (wk) ++wk->sweeps;
    ++sol.iterations;

    // effective viscosity on faces, mixing length and last sweep's gradient
    auto nu_face = [&](const int f) {
      if (laminar_only) return in.nu;
      const double y = grid.faces[f];
      double dudy;
      if (f == 0) {
        return in.nu;  // mixing length vanishes at the wall
      } else if (f == n) {
        dudy = (in.u_les - u[n - 1]) / (h - yc[n - 1]);
      } else {
        dudy = (u[f] - u[f - 1]) / (yc[f] - yc[f - 1]);
      }
      const double lm = c.kappa * y * (1.0 - std::exp(-y * u_tau / (in.nu * c.a_plus)));
      return in.nu + lm * lm * std::abs(dudy);
    };

    // cell j balance: flux(top) - flux(bottom) = 0
    for (int j = 0; j < n; ++j) {
      if (wk) ++wk->sweep_ops;
      const double nu_b = nu_face(j);
      const double nu_t = nu_face(j + 1);
      const double db = (j == 0) ? yc[0] : (yc[j] - yc[j - 1]);
      const double dt = (j == n - 1) ? (h - yc[n - 1]) : (yc[j + 1] - yc[j]);
      const double cb = nu_b / db;
      const double ct = nu_t / dt;
      lo[j] = (j == 0) ? 0.0 : cb;
      up[j] = (j == n - 1) ? 0.0 : ct;
      di[j] = -(cb + ct);
      rhs[j] = 0.0;
      if (j == 0) rhs[j] -= cb * 0.0;  // wall value
      if (j == n - 1) rhs[j] -= ct * in.u_les;
    }
    thomas_solve(lo, di, up, rhs, wk);
    // blend with the previous sweep; the nu_t feedback oscillates undamped
    const double relax = 0.6;
    for (int j = 0; j < n; ++j) u[j] = (1.0 - relax) * u[j] + relax * rhs[j];

    const double tau_w = in.rho * in.nu * u[0] / yc[0];
    u_tau = std::sqrt(std::max(tau_w, 0.0) / in.rho);
    const double change = std::abs(tau_w - tau_prev) / std::max(std::abs(tau_w), 1e-300);
    tau_prev = tau_w;
    sol.residual = change;
    if (change <= tol) {
      sol.u_tau = u_tau;
      sol.tau_w = tau_w;
      if (cell_velocity) *cell_velocity = u;
      return sol;
    }
  }
  throw ConvergenceError("solve_utau_fv: picard did not converge", sol.residual,
                         sol.iterations);
}

std::vector<double> reconstruct_profile(const EqwmSolution& sol, const WallModelInput& in,
                                        const ClosureConstants& c,
                                        const std::vector<double>& y_samples) {
  in.validate();
  const quad::DomainMap map = (sol.method == Method::SpectralLinear)
                                  ? quad::DomainMap::Linear
                                  : quad::DomainMap::Clustered;
  const int q = (sol.method == Method::FiniteVolume) ? 256 : sol.points;
  const auto rule = quad::gll_rule_cached(q);

  std::vector<double> u(y_samples.size(), 0.0);
  for (size_t k = 0; k < y_samples.size(); ++k) {
    const double y = y_samples[k];
    if (y < 0.0 || y > in.h_wm * (1.0 + 1e-12))
      throw std::invalid_argument("reconstruct_profile: sample outside [0, h_wm]");
    if (y == 0.0 || sol.u_tau == 0.0) continue;
    const quad::MappedRule mr = quad::map_to_physical(*rule, map, y);
    u[k] = integrate_matching_velocity(mr, sol.u_tau, in.nu, c, nullptr);
  }
  return u;
}

SpuriousDiagnosis detect_spurious_profile(const EqwmSolution& sol, const WallModelInput& in,
                                          const ClosureConstants& c, const int reference_q) {
  if (sol.method == Method::FiniteVolume)
    throw std::invalid_argument("detect_spurious_profile: spectral solutions only");
  if (reference_q <= sol.points)
    throw std::invalid_argument("detect_spurious_profile: reference_q must exceed solution q");

  const quad::DomainMap map = (sol.method == Method::SpectralLinear)
                                  ? quad::DomainMap::Linear
                                  : quad::DomainMap::Clustered;
  const EqwmSolution ref = solve_utau_spectral(in, reference_q, map, c);

  const int ns = 201;
  std::vector<double> ys(ns);
  for (int k = 0; k < ns; ++k) ys[k] = in.h_wm * (k + 1.0) / ns;
  const std::vector<double> us = reconstruct_profile(sol, in, c, ys);
  const std::vector<double> ur = reconstruct_profile(ref, in, c, ys);

  double num = 0.0, den = 0.0;
  for (int k = 0; k < ns; ++k) {
    num += (us[k] - ur[k]) * (us[k] - ur[k]);
    den += ur[k] * ur[k];
  }
  SpuriousDiagnosis d;
  d.reference_q = reference_q;
  d.l2_error = std::sqrt(num / std::max(den, 1e-300));
  d.spurious = d.l2_error > 0.01;
  return d;
}

WallModelInput synthetic_channel_input(const double re_tau, const ClosureConstants& c) {
  if (!(re_tau > 0.0)) throw std::invalid_argument("synthetic_channel_input: re_tau > 0");
  WallModelInput in;
  in.h_wm = 0.1;          // delta = 1
  in.nu = 1.0 / re_tau;   // u_tau = 1
  in.rho = 1.0;
  const double h_plus = 0.1 * re_tau;
  in.u_les = std::log(h_plus) / c.kappa + c.b;
  return in;
}

OptimalCount optimal_point_count(const double re_tau, const Method method,
                                 const double error_target, const ClosureConstants& c) {
  if (!(error_target > 0.0))
    throw std::invalid_argument("optimal_point_count: error_target > 0");
  const WallModelInput in = synthetic_channel_input(re_tau, c);
  const int cap = 1024;

  auto tau_at = [&](const int n) {
    if (method == Method::FiniteVolume) {
      const FvGrid g = make_fv_grid(n, in.h_wm, in.nu);
      return solve_utau_fv(in, g, c).tau_w;
    }
    const quad::DomainMap map = (method == Method::SpectralLinear)
                                    ? quad::DomainMap::Linear
                                    : quad::DomainMap::Clustered;
    return solve_utau_spectral(in, n, map, c).tau_w;
  };

  const double tau_ref = (method == Method::FiniteVolume) ? [&] {
    const FvGrid g = make_fv_grid(4096, in.h_wm, in.nu);
    return solve_utau_fv(in, g, c, 1e-9, 400).tau_w;
  }() : tau_at(cap);

  auto err_at = [&](const int n) { return std::abs(tau_at(n) - tau_ref) / tau_ref; };

  int lo = 2, hi = 4;
  double err_hi = err_at(hi);
  while (err_hi > error_target) {
    lo = hi;
    hi *= 2;
    if (hi > cap) return {cap, true, err_at(cap)};
    err_hi = err_at(hi);
  }
  double err_best = err_hi;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    const double e = err_at(mid);
    if (e <= error_target) {
      hi = mid;
      err_best = e;
    } else {
      lo = mid;
    }
  }
  return {hi, false, err_best};
}

}  // namespace gfwm::eqwm
