#ifndef PARSIMIX_ERRORS_HPP
#define PARSIMIX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace parsimix {

// Bad user input: unknown model codes, malformed CSV cells, dimension
// mismatches. CLI maps these to exit code 1.
class InvalidInput : public std::runtime_error {
public:
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: non-PD covariance, collapsed component, all EM
// chains degenerate. CLI maps these to exit code 2.
class SingularityError : public std::runtime_error {
public:
  explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace parsimix

#endif
