#include "asuq/partition.hpp"

#include "asuq/errors.hpp"

namespace asuq {

std::string selector_name(Selector s) {
  switch (s) {
    case Selector::all: return "all";
    case Selector::encoder: return "encoder";
    case Selector::decoder: return "decoder";
  }
  throw ContractError("unknown selector");
}

Selector selector_from_name(const std::string& name) {
  if (name == "all") return Selector::all;
  if (name == "encoder") return Selector::encoder;
  if (name == "decoder") return Selector::decoder;
  throw ConfigError("unknown selector '" + name +
                    "' (expected all|encoder|decoder)");
}

Partition build_partition(const ModelConfig& config, Selector selector) {
  config.validate();
  Partition p;
  p.selector = selector;
  for (const auto& l : layer_layout(config)) {
    const bool stochastic = selector == Selector::all ||
                            (selector == Selector::encoder && l.encoder) ||
                            (selector == Selector::decoder && !l.encoder);
    auto& side = stochastic ? p.stochastic_indices : p.deterministic_indices;
    for (Eigen::Index i = 0; i < l.size(); ++i) side.push_back(l.offset + i);
  }
  return p;
}

Vec gather_stochastic(const Vec& values, const Partition& p) {
  if (values.size() != p.total_count())
    throw ContractError("vector length does not match partition");
  Vec out(p.stochastic_count());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = values[p.stochastic_indices[i]];
  return out;
}

Vec gather_stochastic(const ParameterVector& theta, const Partition& p) {
  return gather_stochastic(theta.values, p);
}

ParameterVector assemble_full(const Vec& theta_s, const ParameterVector& theta0,
                              const Partition& p) {
  if (theta_s.size() != p.stochastic_count())
    throw ContractError("stochastic vector length does not match partition");
  if (theta0.size() != p.total_count())
    throw ContractError("anchor parameter length does not match partition");
  ParameterVector out = theta0;
  for (Eigen::Index i = 0; i < theta_s.size(); ++i)
    out.values[p.stochastic_indices[i]] = theta_s[i];
  return out;
}

}  // namespace asuq
