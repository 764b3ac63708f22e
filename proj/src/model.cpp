#include "asuq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "asuq/errors.hpp"

namespace asuq {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<const Vec>;

void require_finite(const Eigen::Ref<const Vec>& v, const char* stage) {
  if (!v.allFinite())
    throw NumericalError(std::string("non-finite value at ") + stage);
}

void require_finite(double v, const char* stage) {
  if (!std::isfinite(v))
    throw NumericalError(std::string("non-finite value at ") + stage);
}

// Weight views into a flat vector, one per layout block.
struct WeightViews {
  MapMat enc_w1, enc_w2, dec_w1, dec_w2;
  MapVec enc_b1, enc_b2, dec_b1, dec_b2;
};

WeightViews map_weights(const ModelConfig& config, const double* p) {
  const Eigen::Index in = config.input_dim();
  const Eigen::Index eh = config.enc_hidden;
  const Eigen::Index lat = config.latent_dim;
  const Eigen::Index dh = config.dec_hidden;
  const Eigen::Index out = config.input_dim();

  const double* q = p;
  MapMat enc_w1(q, in, eh);
  q += in * eh;
  MapVec enc_b1(q, eh);
  q += eh;
  MapMat enc_w2(q, eh, 2 * lat);
  q += eh * 2 * lat;
  MapVec enc_b2(q, 2 * lat);
  q += 2 * lat;
  MapMat dec_w1(q, lat, dh);
  q += lat * dh;
  MapVec dec_b1(q, dh);
  q += dh;
  MapMat dec_w2(q, dh, out);
  q += dh * out;
  MapVec dec_b2(q, out);
  return {enc_w1, enc_w2, dec_w1, dec_w2, enc_b1, enc_b2, dec_b1, dec_b2};
}

Vec one_hot(const ModelConfig& config, const SequenceDatum& x) {
  Vec v = Vec::Zero(config.input_dim());
  for (int p = 0; p < config.seq_len; ++p)
    v[p * config.alphabet_size + x.symbols[p]] = 1.0;
  return v;
}

void check_datum(const ModelConfig& config, const SequenceDatum& x) {
  if (static_cast<int>(x.symbols.size()) != config.seq_len)
    throw ContractError("sequence length does not match config");
  for (int s : x.symbols)
    if (s < 0 || s >= config.alphabet_size)
      throw ContractError("symbol out of alphabet range");
}

void check_inputs(const ModelConfig& config, const ParameterVector& theta,
                  const SequenceDatum& x, const LatentNoise& noise) {
  if (theta.size() != config.param_count())
    throw ContractError("parameter vector length does not match config");
  check_datum(config, x);
  if (noise.epsilon.size() != config.latent_dim)
    throw ContractError("latent noise length does not match latent_dim");
  if (!noise.epsilon.allFinite())
    throw ContractError("latent noise must be finite");
}

}  // namespace

int ModelConfig::param_count() const {
  int d = 0;
  for (const auto& l : layer_layout(*this)) d += static_cast<int>(l.size());
  return d;
}

void ModelConfig::validate() const {
  if (alphabet_size < 1 || seq_len < 1 || latent_dim < 1 || enc_hidden < 1 ||
      dec_hidden < 1)
    throw ConfigError("model sizes must all be >= 1");
  if (kl_weight < 0.0) throw ConfigError("kl_weight must be nonnegative");
}

std::vector<LayerSpec> layer_layout(const ModelConfig& c) {
  const Eigen::Index in = c.input_dim();
  const Eigen::Index eh = c.enc_hidden;
  const Eigen::Index lat = c.latent_dim;
  const Eigen::Index dh = c.dec_hidden;

  std::vector<LayerSpec> layout = {
      {"enc.w1", 0, in, eh, true, false},
      {"enc.b1", 0, 1, eh, true, true},
      {"enc.w2", 0, eh, 2 * lat, true, false},
      {"enc.b2", 0, 1, 2 * lat, true, true},
      {"dec.w1", 0, lat, dh, false, false},
      {"dec.b1", 0, 1, dh, false, true},
      {"dec.w2", 0, dh, in, false, false},
      {"dec.b2", 0, 1, in, false, true},
  };
  Eigen::Index off = 0;
  for (auto& l : layout) {
    l.offset = off;
    off += l.size();
  }
  return layout;
}

void ParameterVector::validate() const {
  Eigen::Index off = 0;
  for (const auto& l : layout) {
    if (l.offset != off) throw ContractError("layout offsets not contiguous");
    off += l.size();
  }
  if (off != values.size())
    throw ContractError("layout does not cover the parameter vector");
}

std::vector<SequenceDatum> dataset_templates(const ModelConfig& c) {
  std::vector<SequenceDatum> out;
  for (int t = 0; t < 8; ++t) {
    SequenceDatum d;
    d.symbols.resize(c.seq_len);
    for (int i = 0; i < c.seq_len; ++i)
      d.symbols[i] =
          t < 4 ? t % c.alphabet_size : (t - 4 + i) % c.alphabet_size;
    out.push_back(std::move(d));
  }
  return out;
}

Dataset generate_dataset(const ModelConfig& config, int num_items,
                         std::uint64_t seed) {
  config.validate();
  if (num_items < 10)
    throw ConfigError("num_items must be >= 10 to populate all three splits");

  const auto templates = dataset_templates(config);
  Rng rng(seed);

  std::vector<SequenceDatum> pool;
  pool.reserve(num_items);
  for (int i = 0; i < num_items; ++i) {
    SequenceDatum d = templates[rng.uniform_below(templates.size())];
    for (int p = 0; p < config.seq_len; ++p) {
      if (rng.uniform01() < 0.1)
        d.symbols[p] = static_cast<int>(rng.uniform_below(config.alphabet_size));
    }
    pool.push_back(std::move(d));
  }

  const int n_train = num_items * 8 / 10;
  const int n_val = num_items / 10;
  const int n_test = num_items - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw ConfigError("num_items too small to populate all three splits");

  Dataset data;
  data.generator_seed = seed;
  data.train.assign(pool.begin(), pool.begin() + n_train);
  data.validation.assign(pool.begin() + n_train, pool.begin() + n_train + n_val);
  data.test.assign(pool.begin() + n_train + n_val, pool.end());
  return data;
}

ParameterVector init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParameterVector theta;
  theta.layout = layer_layout(config);
  theta.values = Vec::Zero(config.param_count());

  Rng rng(seed);
  for (const auto& l : theta.layout) {
    if (l.bias) continue;  // biases stay zero
    const double a = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
    for (Eigen::Index i = 0; i < l.size(); ++i)
      theta.values[l.offset + i] = -a + 2.0 * a * rng.uniform01();
  }
  return theta;
}

double elbo_loss_and_grad(const ModelConfig& config,
                          const ParameterVector& theta, const SequenceDatum& x,
                          const LatentNoise& noise, Vec* grad) {
  check_inputs(config, theta, x, noise);
  const auto w = map_weights(config, theta.values.data());
  const int A = config.alphabet_size;
  const Eigen::Index lat = config.latent_dim;

  // Forward.
  const Vec x_oh = one_hot(config, x);
  const Vec h1 = (w.enc_w1.transpose() * x_oh + w.enc_b1).array().tanh();
  require_finite(h1, "enc.w1 hidden activation");
  const Vec pre2 = w.enc_w2.transpose() * h1 + w.enc_b2;
  const Vec mu = pre2.head(lat);
  const Vec logvar = pre2.tail(lat);
  require_finite(pre2, "enc.w2 mean/log-variance output");
  const Vec sigma = (0.5 * logvar.array()).exp();
  require_finite(sigma, "enc.w2 log-variance (overflow in exp)");
  const Vec z = mu + sigma.cwiseProduct(noise.epsilon);
  const Vec h2 = (w.dec_w1.transpose() * z + w.dec_b1).array().tanh();
  require_finite(h2, "dec.w1 hidden activation");
  const Vec logits = w.dec_w2.transpose() * h2 + w.dec_b2;
  require_finite(logits, "dec.w2 logits");

  double recon = 0.0;
  Vec softmax(logits.size());
  for (int p = 0; p < config.seq_len; ++p) {
    const auto lp = logits.segment(p * A, A);
    const double m = lp.maxCoeff();
    const Vec e = (lp.array() - m).exp();
    const double Z = e.sum();
    recon += m + std::log(Z) - lp[x.symbols[p]];
    softmax.segment(p * A, A) = e / Z;
  }
  require_finite(recon, "reconstruction cross-entropy");

  const double kl =
      0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0)
                .sum();
  require_finite(kl, "latent KL (overflow in exp of log-variance)");

  const double loss = recon + config.kl_weight * kl;

  if (grad == nullptr) return loss;

  // Backward.
  grad->setZero(theta.size());
  double* g = grad->data();
  const Eigen::Index in = config.input_dim();
  const Eigen::Index eh = config.enc_hidden;
  const Eigen::Index dh = config.dec_hidden;

  Eigen::Map<RowMat> g_enc_w1(g, in, eh);
  Eigen::Map<Vec> g_enc_b1(g + in * eh, eh);
  Eigen::Map<RowMat> g_enc_w2(g + in * eh + eh, eh, 2 * lat);
  Eigen::Map<Vec> g_enc_b2(g + in * eh + eh + eh * 2 * lat, 2 * lat);
  double* gd = g + in * eh + eh + eh * 2 * lat + 2 * lat;
  Eigen::Map<RowMat> g_dec_w1(gd, lat, dh);
  Eigen::Map<Vec> g_dec_b1(gd + lat * dh, dh);
  Eigen::Map<RowMat> g_dec_w2(gd + lat * dh + dh, dh, in);
  Eigen::Map<Vec> g_dec_b2(gd + lat * dh + dh + dh * in, in);

  Vec dlogits = softmax;
  for (int p = 0; p < config.seq_len; ++p)
    dlogits[p * A + x.symbols[p]] -= 1.0;

  g_dec_b2 = dlogits;
  g_dec_w2 = h2 * dlogits.transpose();
  const Vec dh2 = w.dec_w2 * dlogits;

  const Vec dpre3 = dh2.array() * (1.0 - h2.array().square());
  g_dec_b1 = dpre3;
  g_dec_w1 = z * dpre3.transpose();
  const Vec dz = w.dec_w1 * dpre3;

  Vec dmu = dz + config.kl_weight * mu;
  Vec dlogvar = 0.5 * dz.cwiseProduct(noise.epsilon).cwiseProduct(sigma) +
                config.kl_weight * 0.5 * (logvar.array().exp() - 1.0).matrix();

  Vec dpre2(2 * lat);
  dpre2 << dmu, dlogvar;
  g_enc_b2 = dpre2;
  g_enc_w2 = h1 * dpre2.transpose();
  const Vec dh1 = w.enc_w2 * dpre2;

  const Vec dpre1 = dh1.array() * (1.0 - h1.array().square());
  g_enc_b1 = dpre1;
  g_enc_w1 = x_oh * dpre1.transpose();

  return loss;
}

double elbo_loss(const ModelConfig& config, const ParameterVector& theta,
                 const SequenceDatum& x, const LatentNoise& noise) {
  return elbo_loss_and_grad(config, theta, x, noise, nullptr);
}

Vec grad_elbo(const ModelConfig& config, const ParameterVector& theta,
              const SequenceDatum& x, const LatentNoise& noise) {
  Vec grad;
  elbo_loss_and_grad(config, theta, x, noise, &grad);
  return grad;
}

Vec encode_mean(const ModelConfig& config, const ParameterVector& theta,
                const SequenceDatum& x) {
  if (theta.size() != config.param_count())
    throw ContractError("parameter vector length does not match config");
  check_datum(config, x);
  const auto w = map_weights(config, theta.values.data());
  const Vec x_oh = one_hot(config, x);
  const Vec h1 = (w.enc_w1.transpose() * x_oh + w.enc_b1).array().tanh();
  const Vec pre2 = w.enc_w2.transpose() * h1 + w.enc_b2;
  return pre2.head(config.latent_dim);
}

SequenceDatum decode_latent(const ModelConfig& config,
                            const ParameterVector& theta, const Vec& z) {
  if (theta.size() != config.param_count())
    throw ContractError("parameter vector length does not match config");
  if (z.size() != config.latent_dim)
    throw ContractError("latent vector length does not match latent_dim");
  const auto w = map_weights(config, theta.values.data());
  const int A = config.alphabet_size;

  const Vec h2 = (w.dec_w1.transpose() * z + w.dec_b1).array().tanh();
  const Vec logits = w.dec_w2.transpose() * h2 + w.dec_b2;

  SequenceDatum out;
  out.symbols.resize(config.seq_len);
  for (int p = 0; p < config.seq_len; ++p) {
    int best = 0;
    for (int s = 1; s < A; ++s)
      if (logits[p * A + s] > logits[p * A + best]) best = s;
    out.symbols[p] = best;
  }
  return out;
}

void AdamOptimizer::update(Vec& params, const Vec& grad) {
  ++step_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

PretrainResult pretrain(const ModelConfig& config, const Dataset& data,
                        int epochs, double lr, int batch, std::uint64_t seed) {
  config.validate();
  if (data.train.empty()) throw ConfigError("training split is empty");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (batch < 1) throw ConfigError("batch size must be positive");
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");

  PretrainResult result;
  result.params = init_parameters(config, seed);
  if (epochs == 0) return result;

  Rng order_rng(derive_seed(seed, "pretrain.order"));
  Rng noise_rng(derive_seed(seed, "pretrain.noise"));
  AdamOptimizer adam(result.params.size(), lr);

  std::vector<std::size_t> idx(data.train.size());
  std::iota(idx.begin(), idx.end(), 0);

  Vec grad(result.params.size());
  Vec batch_grad(result.params.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    order_rng.shuffle(idx);
    double epoch_sum = 0.0;
    for (std::size_t b0 = 0; b0 < idx.size(); b0 += batch) {
      const std::size_t b1 = std::min(idx.size(), b0 + batch);
      batch_grad.setZero();
      double batch_loss = 0.0;
      for (std::size_t i = b0; i < b1; ++i) {
        LatentNoise noise{noise_rng.normal_vec(config.latent_dim)};
        double loss;
        try {
          loss = elbo_loss_and_grad(config, result.params, data.train[idx[i]],
                                    noise, &grad);
        } catch (const NumericalError& e) {
          throw TrainingError("pretrain diverged at epoch " +
                              std::to_string(epoch) + " batch " +
                              std::to_string(b0 / batch) + ": " + e.what());
        }
        batch_loss += loss;
        batch_grad += grad;
      }
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      batch_loss *= inv;
      batch_grad *= inv;
      if (!std::isfinite(batch_loss))
        throw TrainingError("pretrain diverged at epoch " +
                            std::to_string(epoch) + " batch " +
                            std::to_string(b0 / batch));
      adam.update(result.params.values, batch_grad);
      epoch_sum += batch_loss * static_cast<double>(b1 - b0);
    }
    result.epoch_loss.push_back(epoch_sum /
                                static_cast<double>(data.train.size()));
  }
  return result;
}

double datum_nll(const ModelConfig& config, const ParameterVector& theta,
                 const SequenceDatum& x, int latent_samples,
                 std::uint64_t seed) {
  if (latent_samples < 1) throw ConfigError("latent_samples must be >= 1");
  ModelConfig eval_config = config;
  eval_config.kl_weight = 1.0;  // nLL always scores the full latent term

  Rng rng(seed);
  double sum = 0.0;
  for (int s = 0; s < latent_samples; ++s) {
    LatentNoise noise{rng.normal_vec(config.latent_dim)};
    sum += elbo_loss(eval_config, theta, x, noise);
  }
  return sum / static_cast<double>(latent_samples);
}

}  // namespace asuq
