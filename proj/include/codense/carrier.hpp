#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace codense {

// Finite state space. Labels are optional display names, one per state.
struct Carrier {
  int size = 0;
  std::optional<std::vector<std::string>> labels;

  Carrier() = default;
  explicit Carrier(int n) : size(n) { validate(); }
  Carrier(std::vector<std::string> names) : size(static_cast<int>(names.size())), labels(std::move(names)) {
    validate();
  }

  void validate() const {
    if (size < 1) throw std::invalid_argument("carrier size must be >= 1");
    if (labels) {
      if (static_cast<int>(labels->size()) != size)
        throw std::invalid_argument("carrier label count does not match size");
      std::set<std::string> seen(labels->begin(), labels->end());
      if (static_cast<int>(seen.size()) != size)
        throw std::invalid_argument("carrier labels must be pairwise distinct");
    }
  }

  std::string name(int s) const {
    if (labels) return (*labels)[s];
    return "s" + std::to_string(s);
  }

  // -1 if unknown.
  int index_of(const std::string& name) const {
    if (labels) {
      for (int i = 0; i < size; ++i)
        if ((*labels)[i] == name) return i;
      return -1;
    }
    if (name.size() > 1 && name[0] == 's') {
      int v = 0;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return -1;
        v = v * 10 + (name[i] - '0');
      }
      return v < size ? v : -1;
    }
    return -1;
  }

  bool operator==(const Carrier& o) const { return size == o.size; }
};

}  // namespace codense
