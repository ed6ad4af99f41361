// Error types shared across the toolkit. Precondition violations use the
// standard exceptions; iterative failures carry their last state.

#ifndef GFWM_ERRORS_HPP
#define GFWM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gfwm {

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double last_residual_, int iterations_)
      : std::runtime_error(what), last_residual(last_residual_), iterations(iterations_) {}
  double last_residual;
  int iterations;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line_) : std::runtime_error(what), line(line_) {}
  int line;  // 1-based line number in the offending file
};

}  // namespace gfwm

#endif
