#pragma once

#include <stdexcept>
#include <vector>

#include "codense/carrier.hpp"
#include "codense/functor.hpp"

namespace codense {

// A finite coalgebra x: X -> BX: one behavior value per state.
struct Coalgebra {
  Carrier carrier;
  FunctorRef functor;
  std::vector<BehaviorValue> next;

  void validate() const {
    carrier.validate();
    if (!functor) throw std::invalid_argument("coalgebra without a functor");
    if (static_cast<int>(next.size()) != carrier.size)
      throw std::invalid_argument("coalgebra needs one behavior per state");
    for (int s = 0; s < carrier.size; ++s)
      validate_shape(functor, next[s], carrier.size, "next." + carrier.name(s));
  }
};

}  // namespace codense
