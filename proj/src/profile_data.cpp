#include "gfwm/profile_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gfwm/errors.hpp"
#include "gfwm/quadrature.hpp"

namespace gfwm::harness {

namespace {

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

bool parse_double(const std::string& tok, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ReferenceProfile ingest_profile(const std::string& text, ProfileFormat format,
                                double re_tau, const std::string& source) {
  if (!(re_tau > 0.0) || !std::isfinite(re_tau)) fail("profile re_tau must be positive");

  ReferenceProfile p;
  p.source = source;
  p.re_tau = re_tau;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::string first;
    if (!(row >> first)) continue;  // blank line
    if (first[0] == '#' || first[0] == '%') continue;

    std::string second;
    if (!(row >> second)) {
      throw ParseError("profile row has only one column", line_no);
    }
    double y = 0.0, u = 0.0;
    if (!parse_double(first, y) || !parse_double(second, u)) {
      throw ParseError("profile row is not numeric: '" + first + " " + second + "'",
                       line_no);
    }
    p.y_plus.push_back(y);
    p.u_plus.push_back(u);
  }
  if (p.y_plus.empty()) {
    throw ParseError("profile holds no data rows", std::max(1, line_no));
  }

  if (format == ProfileFormat::YOverDeltaUPlus) {
    for (double& y : p.y_plus) y *= re_tau;
  }

  if (p.y_plus.size() < 10) fail("profile needs at least 10 samples");
  for (size_t i = 0; i < p.y_plus.size(); ++i) {
    if (!std::isfinite(p.y_plus[i]) || !std::isfinite(p.u_plus[i])) {
      fail("profile sample " + std::to_string(i) + " is not finite");
    }
    if (p.y_plus[i] < 0.0) fail("profile ordinate must be nonnegative");
    if (p.u_plus[i] < 0.0) fail("profile velocity must be nonnegative");
    if (i > 0 && !(p.y_plus[i] > p.y_plus[i - 1])) {
      fail("profile ordinate must be strictly increasing at sample " + std::to_string(i));
    }
  }
  return p;
}

ReferenceProfile ingest_profile_file(const std::string& path, ProfileFormat format,
                                     double re_tau) {
  std::ifstream in(path);
  if (!in) fail("cannot open profile file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_profile(buf.str(), format, re_tau, path);
}

double sample_u_plus(const ReferenceProfile& profile, double y_plus) {
  const auto& y = profile.y_plus;
  const auto& u = profile.u_plus;
  if (y.empty()) fail("profile holds no samples");
  if (y_plus < y.front() || y_plus > y.back()) {
    throw std::out_of_range("query y_plus " + std::to_string(y_plus) +
                            " outside the sampled interval [" +
                            std::to_string(y.front()) + ", " +
                            std::to_string(y.back()) + "]");
  }
  auto it = std::lower_bound(y.begin(), y.end(), y_plus);
  size_t i = static_cast<size_t>(it - y.begin());
  if (y[i] == y_plus) return u[i];
  double t = (y_plus - y[i - 1]) / (y[i] - y[i - 1]);
  return u[i - 1] + t * (u[i] - u[i - 1]);
}

double sample_matching_velocity(const ReferenceProfile& profile, double h_over_delta) {
  if (!(h_over_delta > 0.0) || !(h_over_delta < 1.0)) {
    fail("matching height must sit inside (0, 1) of the layer");
  }
  return sample_u_plus(profile, h_over_delta * profile.re_tau);
}

double effective_log_intercept(const eqwm::ClosureConstants& constants) {
  // Far enough out that the damping correction is extinct; the remaining
  // drift of the intercept with Y is O(1/Y) and irrelevant downstream.
  const double y_far = 2.0e4;
  const auto rule = quad::gll_rule_cached(512);
  const quad::MappedRule mr =
      quad::map_to_physical(*rule, quad::DomainMap::Clustered, y_far);
  double u_far = 0.0;
  for (int i = 0; i < mr.q; ++i) {
    u_far += mr.w[i] * eqwm::velocity_gradient_plus(mr.y[i], constants);
  }
  return u_far - std::log(y_far) / constants.kappa;
}

double blended_profile_constant(const eqwm::ClosureConstants& constants) {
  // ln(1 + kappa y)/kappa tends to ln(y)/kappa + ln(kappa)/kappa, so the
  // blend constant absorbs the difference to the effective intercept.
  return effective_log_intercept(constants) -
         std::log(constants.kappa) / constants.kappa;
}

double blended_u_plus(double y_plus, double constant,
                      const eqwm::ClosureConstants& constants) {
  if (y_plus < 0.0) fail("blended profile needs y_plus >= 0");
  const double k = constants.kappa;
  return std::log1p(k * y_plus) / k +
         constant * (1.0 - std::exp(-y_plus / 11.0) -
                     (y_plus / 11.0) * std::exp(-y_plus / 3.0));
}

std::string synthetic_profile_text(double re_tau, int n_samples, ProfileFormat format,
                                   const eqwm::ClosureConstants& constants) {
  if (n_samples < 10) fail("synthetic profile needs at least 10 samples");
  if (!(re_tau > 1.0)) fail("synthetic profile needs re_tau > 1");

  const double c_r = blended_profile_constant(constants);
  const double y_lo = 0.1;
  std::string out = "# synthetic channel mean profile, re_tau=";
  append_num(out, re_tau);
  out += format == ProfileFormat::YPlusUPlus ? "\n# y_plus u_plus\n"
                                             : "\n# y_over_delta u_plus\n";
  for (int i = 0; i < n_samples; ++i) {
    const double f = static_cast<double>(i) / (n_samples - 1);
    const double y_plus = y_lo * std::pow(re_tau / y_lo, f);
    const double u = blended_u_plus(y_plus, c_r, constants);
    append_num(out, format == ProfileFormat::YPlusUPlus ? y_plus : y_plus / re_tau);
    out += ' ';
    append_num(out, u);
    out += '\n';
  }
  return out;
}

}  // namespace gfwm::harness
