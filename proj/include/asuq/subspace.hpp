#pragma once

#include <cstdint>
#include <vector>

#include "asuq/partition.hpp"

namespace asuq {

// Loss gradients at weight perturbations around the anchor, one column per
// sampled (datum, perturbation, latent-noise) triple.
struct GradientSampleMatrix {
  Mat columns;  // D_S x n
  double sigma0 = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> datum_ids;  // train-split indices, one per column

  Eigen::Index n() const { return columns.cols(); }
};

// Top-k eigenspace of the uncentered gradient covariance (1/n) G G^T plus
// the frozen anchor it was built around.
struct ActiveSubspace {
  Vec anchor;       // D_S
  Mat projection;   // D_S x k, orthonormal columns
  Vec eigenvalues;  // descending, clamped at 0
  int k = 0;
  int n = 0;
  double sigma0 = 0.0;
};

// For each column: pick a training datum (uniform, without replacement),
// perturb the stochastic block with N(0, sigma0^2 I), draw fresh latent
// noise, and record the loss gradient restricted to stochastic coordinates.
GradientSampleMatrix sample_gradients(const ModelConfig& config,
                                      const ParameterVector& theta0,
                                      const Partition& p, const Dataset& data,
                                      int n, double sigma0,
                                      std::uint64_t seed);

struct EigenPairs {
  Mat vectors;  // D_S x k
  Vec values;   // length k, descending
};

// Eigenpairs of (1/n) G G^T via the n x n Gram matrix G^T G: the D_S x D_S
// covariance is never materialized. Each eigenvector's sign is fixed so its
// largest-magnitude entry is positive. Requesting k beyond the numerical
// rank (s_k < 1e-10 * s_1) is an error.
EigenPairs covariance_eigs(const GradientSampleMatrix& g, int k);

ActiveSubspace build_subspace(const ModelConfig& config,
                              const ParameterVector& theta0,
                              const Partition& p, const Dataset& data, int n,
                              int k, double sigma0, std::uint64_t seed);

// theta_s = anchor + P * omega.
Vec project_to_full(const ActiveSubspace& s, const Vec& omega);

}  // namespace asuq
