#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "asuq/subspace.hpp"

namespace asuq {

// Diffuse isotropic Gaussian prior over subspace coordinates.
struct PriorConfig {
  Vec mean;               // length k, default all zero
  double std_dev = 5.0;   // isotropic

  static PriorConfig diffuse(int k, double std_dev = 5.0, double mean = 0.0);
  void validate(int k) const;
};

// Factorized Gaussian q(omega) = N(mu, diag(softplus(rho)^2)). rho is the
// unconstrained scale parameter; softplus keeps sigma positive for every
// finite rho.
struct VariationalPosterior {
  Vec mu;
  Vec rho;
  int k = 0;

  Vec sigma() const;  // softplus(rho), elementwise
};

double softplus(double x);
double softplus_inv(double y);

// Closed-form KL(q || prior) for factorized Gaussians:
//   sum_i [ ln(sigma_prior / sigma_i) + (sigma_i^2 + (mu_i - m_i)^2)
//           / (2 sigma_prior^2) - 1/2 ].
double gaussian_kl(const VariationalPosterior& q, const PriorConfig& prior);

// Reparameterized draw omega = mu + sigma .* xi with xi ~ N(0, I).
Vec sample_omega(const VariationalPosterior& q, std::uint64_t seed);

struct ViHyper {
  int epochs = 50;
  int batch = 32;
  double lr = 0.001;
  double kl_scale = 0.0;  // resolved to 1/|train| by the pipeline when 0
  std::uint64_t seed = 0;
};

// Everything the per-batch objective depends on besides (mu, rho); the
// subspace draw xi and the per-datum latent noises are pinned so the
// objective is a deterministic, differentiable function of the posterior
// parameters.
struct ViBatchContext {
  const ActiveSubspace& subspace;
  const Partition& partition;
  const ParameterVector& theta0;
  const ModelConfig& config;
  const PriorConfig& prior;
  double kl_scale;
  std::span<const SequenceDatum> batch;
  std::span<const LatentNoise> noises;  // one per batch datum
  const Vec& xi;                        // length k
};

// Batch-mean model loss at theta = [anchor + P omega, theta0^D] plus
// kl_scale * KL(q || prior), with omega = mu + softplus(rho) .* xi.
double vi_objective(const VariationalPosterior& q, const ViBatchContext& ctx);

// Analytic gradient of vi_objective w.r.t. (mu, rho) at fixed xi/noises.
void vi_objective_grad(const VariationalPosterior& q, const ViBatchContext& ctx,
                       Vec& grad_mu, Vec& grad_rho);

struct ViCurvePoint {
  int epoch = 0;
  double objective = 0.0;
  double kl_term = 0.0;
};

struct FitResult {
  VariationalPosterior posterior;
  std::vector<ViCurvePoint> curve;
};

// Mean-field VI over subspace coordinates: one posterior draw per batch,
// Adam on (mu, rho). Starts at mu = 0 (the pre-trained anchor) with
// sigma ~= 0.01.
FitResult fit_posterior(const ActiveSubspace& s, const Partition& p,
                        const ParameterVector& theta0,
                        const ModelConfig& config, const Dataset& data,
                        const PriorConfig& prior, const ViHyper& h);

}  // namespace asuq
