// Reference mean-velocity profiles: ingestion of two-column text tables,
// piecewise-linear sampling in wall units, and a synthetic channel-profile
// generator whose log region is calibrated to the closure's own effective
// intercept.

#ifndef GFWM_PROFILE_DATA_HPP
#define GFWM_PROFILE_DATA_HPP

#include <string>
#include <vector>

#include "gfwm/eqwm.hpp"

namespace gfwm::harness {

enum class ProfileFormat { YPlusUPlus, YOverDeltaUPlus };

// Mean-velocity table normalized to wall units; ordinate strictly increasing.
struct ReferenceProfile {
  std::string source;
  double re_tau = 0.0;
  std::vector<double> y_plus;
  std::vector<double> u_plus;
};

// Parses whitespace rows of (ordinate, u_plus); extra trailing columns are
// ignored so multi-column tables ingest as-is. Blank lines and lines starting
// with '#' or '%' are skipped. YOverDeltaUPlus ordinates are scaled by re_tau
// into wall units. Throws ParseError (malformed row or no data rows, 1-based
// line number) and std::invalid_argument (non-monotone ordinate, negative or
// non-finite values, fewer than 10 samples, re_tau <= 0).
ReferenceProfile ingest_profile(const std::string& text, ProfileFormat format,
                                double re_tau, const std::string& source = "");
ReferenceProfile ingest_profile_file(const std::string& path, ProfileFormat format,
                                     double re_tau);

// Piecewise-linear interpolation in y_plus; exact at the sample points.
// Throws std::out_of_range outside the sampled interval.
double sample_u_plus(const ReferenceProfile& profile, double y_plus);

// u_plus at the matching height, y_plus = h_over_delta * re_tau.
double sample_matching_velocity(const ReferenceProfile& profile, double h_over_delta);

// Log-law intercept the damped-mixing-length closure actually produces:
// u_plus(Y) - ln(Y)/kappa far outside the buffer layer.
double effective_log_intercept(const eqwm::ClosureConstants& constants = {});

// Additive constant of the blended inner-layer profile (Reichardt's form),
// calibrated so its log region lands on the closure's effective intercept.
double blended_profile_constant(const eqwm::ClosureConstants& constants = {});

// Smooth sublayer-to-log blend in wall units with the given additive constant.
double blended_u_plus(double y_plus, double constant,
                      const eqwm::ClosureConstants& constants = {});

// Two-column table text for a channel at re_tau: n_samples log-spaced
// ordinates from y_plus = 0.1 up to re_tau. Throws std::invalid_argument for
// n_samples < 10 or re_tau <= 1.
std::string synthetic_profile_text(double re_tau, int n_samples, ProfileFormat format,
                                   const eqwm::ClosureConstants& constants = {});

}  // namespace gfwm::harness

#endif
