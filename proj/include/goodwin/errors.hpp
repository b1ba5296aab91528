#pragma once
// Error taxonomy shared by the library and the CLI.  The three exception
// classes map one-to-one onto the CLI's nonzero exit codes so that scripted
// callers can distinguish "your config is wrong" from "these parameters break
// the model's standing assumptions" from "the numerics failed".

#include <stdexcept>

namespace goodwin {

enum class ExitCode : int {
  ok = 0,
  config_error = 2,      // malformed configuration / unknown keys / bad flags
  assumption_error = 3,  // parameter set fails a standing model assumption
  numerical_error = 4,   // domain escape, missing root, non-convergence, ...
};

// Configuration input is syntactically or semantically unusable.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The parameter set violates a standing assumption (feasibility of the
// equilibrium, uniqueness of the rest point, growth conditions, ...).
struct AssumptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed: a state left the admissible domain, a root
// was not bracketed, quadrature did not reach its tolerance, and so on.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace goodwin
