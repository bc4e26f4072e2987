#pragma once

#include <vector>

#include "divsf/mdp_core.hpp"

namespace divsf {

struct PolicyEntry {
  StochasticPolicy policy;
  SuccessorFeatures psi;
  double v_e = 0.0;
};

/// Ordered set of discovered policies with their successor features and
/// constraint values, plus the running optimum v_e* of the constraint value.
struct PolicySet {
  std::vector<PolicyEntry> entries;
  double v_star = 0.0;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  void add(PolicyEntry entry) { entries.push_back(std::move(entry)); }

  std::vector<Vector> sfs() const {
    std::vector<Vector> out;
    out.reserve(entries.size());
    for (const PolicyEntry& e : entries) out.push_back(e.psi.psi);
    return out;
  }
};

}  // namespace divsf
