#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace asuq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// splitmix64 mixing step; used to derive independent seed streams.
std::uint64_t mix64(std::uint64_t x);

// Child seed for stream `stream` of a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Child seed for a named stream (tag hashed with FNV-1a).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

// 64-bit hash of a byte string (FNV-1a), used for config digests.
std::uint64_t fnv1a64(std::string_view bytes);

// Deterministic RNG: std::mt19937_64 engine with hand-rolled distributions.
// The engine's output sequence is fixed by the standard; the distributions
// are implemented here because the stdlib ones are implementation-defined,
// and checkpoints/reports must be reproducible bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  // Standard normal via Box-Muller with a cached spare.
  double normal();

  Vec normal_vec(Eigen::Index n);

  // Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t uniform_below(std::uint64_t n);

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace asuq
