#include "asuq/vi.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "asuq/errors.hpp"

namespace asuq {

namespace {

// d softplus / d rho.
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_posterior(const VariationalPosterior& q) {
  if (q.mu.size() != q.k || q.rho.size() != q.k)
    throw ContractError("posterior parameter lengths do not match k");
}

}  // namespace

PriorConfig PriorConfig::diffuse(int k, double std_dev, double mean) {
  PriorConfig p;
  p.mean = Vec::Constant(k, mean);
  p.std_dev = std_dev;
  return p;
}

void PriorConfig::validate(int k) const {
  if (std_dev <= 0.0) throw ConfigError("prior std must be positive");
  if (mean.size() != k)
    throw ContractError("prior mean length does not match k");
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inv(double y) {
  // inverse of ln(1 + e^x): x = ln(e^y - 1)
  return std::log(std::expm1(y));
}

Vec VariationalPosterior::sigma() const {
  Vec s(rho.size());
  for (Eigen::Index i = 0; i < rho.size(); ++i) s[i] = softplus(rho[i]);
  return s;
}

double gaussian_kl(const VariationalPosterior& q, const PriorConfig& prior) {
  check_posterior(q);
  prior.validate(q.k);
  const Vec sig = q.sigma();
  const double sp = prior.std_dev;
  double kl = 0.0;
  for (int i = 0; i < q.k; ++i) {
    const double d = q.mu[i] - prior.mean[i];
    kl += std::log(sp / sig[i]) + (sig[i] * sig[i] + d * d) / (2.0 * sp * sp) -
          0.5;
  }
  return kl;
}

Vec sample_omega(const VariationalPosterior& q, std::uint64_t seed) {
  check_posterior(q);
  Rng rng(seed);
  return q.mu + q.sigma().cwiseProduct(rng.normal_vec(q.k));
}

namespace {

void check_context(const VariationalPosterior& q, const ViBatchContext& ctx) {
  check_posterior(q);
  ctx.prior.validate(q.k);
  if (ctx.subspace.k != q.k)
    throw ContractError("posterior k does not match subspace k");
  if (ctx.xi.size() != q.k)
    throw ContractError("xi length does not match k");
  if (ctx.batch.size() != ctx.noises.size())
    throw ContractError("one latent noise per batch datum required");
  if (ctx.batch.empty()) throw ContractError("empty batch");
}

}  // namespace

double vi_objective(const VariationalPosterior& q, const ViBatchContext& ctx) {
  check_context(q, ctx);
  const Vec omega = q.mu + q.sigma().cwiseProduct(ctx.xi);
  const Vec theta_s = project_to_full(ctx.subspace, omega);
  const ParameterVector theta =
      assemble_full(theta_s, ctx.theta0, ctx.partition);

  double loss = 0.0;
  for (std::size_t i = 0; i < ctx.batch.size(); ++i)
    loss += elbo_loss(ctx.config, theta, ctx.batch[i], ctx.noises[i]);
  loss /= static_cast<double>(ctx.batch.size());
  return loss + ctx.kl_scale * gaussian_kl(q, ctx.prior);
}

void vi_objective_grad(const VariationalPosterior& q, const ViBatchContext& ctx,
                       Vec& grad_mu, Vec& grad_rho) {
  check_context(q, ctx);
  const Vec sig = q.sigma();
  const Vec omega = q.mu + sig.cwiseProduct(ctx.xi);
  const Vec theta_s = project_to_full(ctx.subspace, omega);
  const ParameterVector theta =
      assemble_full(theta_s, ctx.theta0, ctx.partition);

  Vec grad_full, mean_grad = Vec::Zero(theta.size());
  for (std::size_t i = 0; i < ctx.batch.size(); ++i) {
    elbo_loss_and_grad(ctx.config, theta, ctx.batch[i], ctx.noises[i],
                       &grad_full);
    mean_grad += grad_full;
  }
  mean_grad /= static_cast<double>(ctx.batch.size());

  // Chain rule through theta_s = anchor + P omega, omega = mu + sigma .* xi.
  const Vec grad_omega =
      ctx.subspace.projection.transpose() *
      gather_stochastic(mean_grad, ctx.partition);

  grad_mu = grad_omega;
  grad_rho.resize(q.k);
  for (int i = 0; i < q.k; ++i)
    grad_rho[i] = grad_omega[i] * ctx.xi[i] * sigmoid(q.rho[i]);

  // KL(q || prior) term.
  const double sp2 = ctx.prior.std_dev * ctx.prior.std_dev;
  for (int i = 0; i < q.k; ++i) {
    grad_mu[i] += ctx.kl_scale * (q.mu[i] - ctx.prior.mean[i]) / sp2;
    const double dkl_dsigma = sig[i] / sp2 - 1.0 / sig[i];
    grad_rho[i] += ctx.kl_scale * dkl_dsigma * sigmoid(q.rho[i]);
  }
}

FitResult fit_posterior(const ActiveSubspace& s, const Partition& p,
                        const ParameterVector& theta0,
                        const ModelConfig& config, const Dataset& data,
                        const PriorConfig& prior, const ViHyper& h) {
  config.validate();
  prior.validate(s.k);
  if (theta0.size() != p.total_count() ||
      s.anchor.size() != p.stochastic_count())
    throw ContractError("subspace, partition and anchor are inconsistent");
  if (data.train.empty()) throw ConfigError("training split is empty");
  if (h.epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (h.batch < 1) throw ConfigError("batch size must be positive");
  if (h.lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (h.kl_scale <= 0.0) throw ConfigError("kl_scale must be positive");

  FitResult result;
  result.posterior.k = s.k;
  result.posterior.mu = Vec::Zero(s.k);
  result.posterior.rho = Vec::Constant(s.k, softplus_inv(0.01));
  if (h.epochs == 0) return result;

  Rng order_rng(derive_seed(h.seed, "vi.order"));
  Rng noise_rng(derive_seed(h.seed, "vi.noise"));
  AdamOptimizer adam(2 * s.k, h.lr);

  std::vector<std::size_t> idx(data.train.size());
  std::iota(idx.begin(), idx.end(), 0);

  Vec packed(2 * s.k), grad_mu(s.k), grad_rho(s.k), packed_grad(2 * s.k);
  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    order_rng.shuffle(idx);
    double obj_sum = 0.0, kl_sum = 0.0;
    int batches = 0;
    for (std::size_t b0 = 0; b0 < idx.size(); b0 += h.batch) {
      const std::size_t b1 = std::min(idx.size(), b0 + h.batch);

      std::vector<SequenceDatum> batch;
      std::vector<LatentNoise> noises;
      batch.reserve(b1 - b0);
      noises.reserve(b1 - b0);
      const Vec xi = noise_rng.normal_vec(s.k);  // one draw per batch
      for (std::size_t i = b0; i < b1; ++i) {
        batch.push_back(data.train[idx[i]]);
        noises.push_back({noise_rng.normal_vec(config.latent_dim)});
      }

      const ViBatchContext ctx{s,     p,     theta0, config, prior,
                               h.kl_scale, batch, noises, xi};
      double obj;
      try {
        obj = vi_objective(result.posterior, ctx);
        vi_objective_grad(result.posterior, ctx, grad_mu, grad_rho);
      } catch (const NumericalError& e) {
        throw TrainingError("posterior fit diverged at epoch " +
                            std::to_string(epoch) + " batch " +
                            std::to_string(b0 / h.batch) + ": " + e.what());
      }
      if (!std::isfinite(obj))
        throw TrainingError("posterior fit diverged at epoch " +
                            std::to_string(epoch) + " batch " +
                            std::to_string(b0 / h.batch));

      packed << result.posterior.mu, result.posterior.rho;
      packed_grad << grad_mu, grad_rho;
      adam.update(packed, packed_grad);
      result.posterior.mu = packed.head(s.k);
      result.posterior.rho = packed.tail(s.k);

      obj_sum += obj;
      kl_sum += gaussian_kl(result.posterior, prior);
      ++batches;
    }
    result.curve.push_back({epoch, obj_sum / batches, kl_sum / batches});
  }
  return result;
}

}  // namespace asuq
