#pragma once

#include <stdexcept>
#include <string>

namespace codense {

// Input or configuration rejected (CLI exit code 2).
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Size bound exceeded; the computation refuses rather than approximate
// (CLI exit code 4).
struct refusal_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// LP solver hit its iteration limit; never silently approximated.
struct lp_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace codense
