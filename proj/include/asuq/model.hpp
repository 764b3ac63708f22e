#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asuq/rng.hpp"

namespace asuq {

// Toy sequence autoencoder: one-hot sequence -> MLP encoder -> Gaussian
// latent -> MLP decoder -> per-position categorical logits. Both hidden
// layers use tanh so the loss is smooth everywhere (finite-difference
// gradient checks need that).
struct ModelConfig {
  int alphabet_size = 4;
  int seq_len = 8;
  int latent_dim = 8;
  int enc_hidden = 64;
  int dec_hidden = 64;
  double kl_weight = 1.0;

  int input_dim() const { return alphabet_size * seq_len; }
  int param_count() const;
  void validate() const;  // throws ConfigError
};

// One weight block inside the flat parameter vector. Matrices are stored
// row-major with shape [rows=fan_in, cols=fan_out]; biases have rows == 1.
struct LayerSpec {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool encoder = false;
  bool bias = false;

  Eigen::Index size() const { return rows * cols; }
};

std::vector<LayerSpec> layer_layout(const ModelConfig& config);

// Flat weight vector plus the block layout that addresses into it.
struct ParameterVector {
  Vec values;
  std::vector<LayerSpec> layout;

  Eigen::Index size() const { return values.size(); }
  void validate() const;  // layout covers [0, D) contiguously
};

struct SequenceDatum {
  std::vector<int> symbols;

  bool operator==(const SequenceDatum&) const = default;
};

struct Dataset {
  std::vector<SequenceDatum> train;
  std::vector<SequenceDatum> validation;
  std::vector<SequenceDatum> test;
  std::uint64_t generator_seed = 0;
};

// Explicit reparameterization noise so every loss/gradient evaluation is a
// pure function of its arguments.
struct LatentNoise {
  Vec epsilon;
};

// The 8 fixed sequence templates behind generate_dataset: templates 0-3 are
// constant sequences, templates 4-7 cycle through the alphabet from
// different starting symbols.
std::vector<SequenceDatum> dataset_templates(const ModelConfig& config);

// Template-with-noise sampling: uniform template choice, then each position
// independently resampled uniformly over the alphabet with probability 0.1.
// Split 80/10/10 by generation order.
Dataset generate_dataset(const ModelConfig& config, int num_items,
                         std::uint64_t seed);

// Glorot-uniform weights, zero biases.
ParameterVector init_parameters(const ModelConfig& config, std::uint64_t seed);

// Per-position categorical cross-entropy of the reconstruction plus
// kl_weight * KL(N(mu, sigma^2) || N(0, I)) of the latent code.
double elbo_loss(const ModelConfig& config, const ParameterVector& theta,
                 const SequenceDatum& x, const LatentNoise& noise);

// Analytic gradient of elbo_loss w.r.t. every weight, at fixed noise.
Vec grad_elbo(const ModelConfig& config, const ParameterVector& theta,
              const SequenceDatum& x, const LatentNoise& noise);

// Forward+backward in one pass; grad may be null when only the value is
// needed.
double elbo_loss_and_grad(const ModelConfig& config,
                          const ParameterVector& theta, const SequenceDatum& x,
                          const LatentNoise& noise, Vec* grad);

// Encoder mean mu(x).
Vec encode_mean(const ModelConfig& config, const ParameterVector& theta,
                const SequenceDatum& x);

// Per-position argmax decode; ties break to the lowest symbol index.
SequenceDatum decode_latent(const ModelConfig& config,
                            const ParameterVector& theta, const Vec& z);

struct PretrainResult {
  ParameterVector params;
  std::vector<double> epoch_loss;  // mean train loss per epoch
};

// Adam (beta1=0.9, beta2=0.999, eps=1e-8) on mini-batch mean elbo_loss with
// fresh latent noise per datum per epoch. epochs == 0 returns
// init_parameters(config, seed) untouched.
PretrainResult pretrain(const ModelConfig& config, const Dataset& data,
                        int epochs, double lr, int batch, std::uint64_t seed);

// Monte Carlo negative ELBO: mean over latent_samples fresh draws of
// elbo_loss evaluated with kl_weight = 1.
double datum_nll(const ModelConfig& config, const ParameterVector& theta,
                 const SequenceDatum& x, int latent_samples,
                 std::uint64_t seed);

// Minimal Adam state shared by pretraining and posterior fitting.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index dim, double lr)
      : lr_(lr), m_(Vec::Zero(dim)), v_(Vec::Zero(dim)) {}

  void update(Vec& params, const Vec& grad);

 private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long step_ = 0;
  Vec m_;
  Vec v_;
};

}  // namespace asuq
