#pragma once

#include <string>
#include <vector>

#include "asuq/model.hpp"

namespace asuq {

enum class Selector { all, encoder, decoder };

std::string selector_name(Selector s);
Selector selector_from_name(const std::string& name);  // throws ConfigError

// Disjoint split of parameter indices into a stochastic block (given a
// posterior) and a deterministic block (frozen at pre-trained values).
struct Partition {
  std::vector<Eigen::Index> stochastic_indices;     // sorted ascending
  std::vector<Eigen::Index> deterministic_indices;  // sorted ascending
  Selector selector = Selector::all;

  Eigen::Index stochastic_count() const {
    return static_cast<Eigen::Index>(stochastic_indices.size());
  }
  Eigen::Index total_count() const {
    return stochastic_count() +
           static_cast<Eigen::Index>(deterministic_indices.size());
  }
};

// selector=all marks every index stochastic; encoder/decoder mark exactly
// the corresponding layers' blocks.
Partition build_partition(const ModelConfig& config, Selector selector);

// Values at the stochastic indices, ascending.
Vec gather_stochastic(const Vec& values, const Partition& p);
Vec gather_stochastic(const ParameterVector& theta, const Partition& p);

// Scatter theta_s into the stochastic slots; deterministic slots keep
// theta0's values bit-exactly.
ParameterVector assemble_full(const Vec& theta_s, const ParameterVector& theta0,
                              const Partition& p);

}  // namespace asuq
