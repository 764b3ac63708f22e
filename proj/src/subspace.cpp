#include "asuq/subspace.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>
#include <string>

#include "asuq/errors.hpp"

namespace asuq {

GradientSampleMatrix sample_gradients(const ModelConfig& config,
                                      const ParameterVector& theta0,
                                      const Partition& p, const Dataset& data,
                                      int n, double sigma0,
                                      std::uint64_t seed) {
  config.validate();
  if (theta0.size() != config.param_count())
    throw ContractError("anchor parameter length does not match config");
  if (theta0.size() != p.total_count())
    throw ContractError("partition does not match config");
  if (n < 1) throw ConfigError("gradient sample count must be >= 1");
  if (n > static_cast<int>(data.train.size()))
    throw ConfigError("gradient sample count " + std::to_string(n) +
                      " exceeds training split size " +
                      std::to_string(data.train.size()));
  if (sigma0 < 0.0) throw ConfigError("sigma0 must be nonnegative");

  // Uniform draw without replacement: seeded shuffle, take the first n.
  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng pick_rng(derive_seed(seed, "subspace.data"));
  pick_rng.shuffle(order);

  GradientSampleMatrix g;
  g.sigma0 = sigma0;
  g.seed = seed;
  g.datum_ids.assign(order.begin(), order.begin() + n);
  g.columns.resize(p.stochastic_count(), n);

  const Vec anchor_s = gather_stochastic(theta0, p);
  // Per-column seed stream so columns are independent of evaluation order.
  for (int j = 0; j < n; ++j) {
    Rng col_rng(derive_seed(seed, static_cast<std::uint64_t>(j) + 1));
    Vec theta_s = anchor_s + sigma0 * col_rng.normal_vec(anchor_s.size());
    LatentNoise noise{col_rng.normal_vec(config.latent_dim)};
    const ParameterVector theta_j = assemble_full(theta_s, theta0, p);
    Vec full_grad;
    try {
      elbo_loss_and_grad(config, theta_j, data.train[g.datum_ids[j]], noise,
                         &full_grad);
    } catch (const NumericalError& e) {
      throw NumericalError("gradient sample " + std::to_string(j) +
                           " is non-finite: " + e.what());
    }
    g.columns.col(j) = gather_stochastic(full_grad, p);
    if (!g.columns.col(j).allFinite())
      throw NumericalError("gradient sample " + std::to_string(j) +
                           " is non-finite");
  }
  return g;
}

EigenPairs covariance_eigs(const GradientSampleMatrix& g, int k) {
  const Eigen::Index n = g.n();
  if (k < 1) throw ConfigError("subspace dimension k must be >= 1");
  if (k > n)
    throw ConfigError("subspace dimension k = " + std::to_string(k) +
                      " exceeds sample count n = " + std::to_string(n));

  // Gram trick: (1/n) G G^T and G^T G share nonzero eigenvalues s_i; the
  // large-side eigenvectors are G w_i / sqrt(s_i).
  const Mat gram = g.columns.transpose() * g.columns;
  Eigen::SelfAdjointEigenSolver<Mat> solver(gram);
  if (solver.info() != Eigen::Success)
    throw NumericalError("Gram matrix eigendecomposition failed");

  // Eigen reports ascending order; flip to descending.
  const Vec s_asc = solver.eigenvalues();
  const Mat w_asc = solver.eigenvectors();

  const double s_top = std::max(s_asc[n - 1], 0.0);
  const double rank_tol = 1e-10 * s_top;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (s_asc[i] >= rank_tol && s_asc[i] > 0.0) ++rank;
  if (k > rank)
    throw ConfigError("requested k = " + std::to_string(k) +
                      " exceeds effective rank " + std::to_string(rank) +
                      " of the gradient sample matrix");

  EigenPairs out;
  out.values.resize(k);
  out.vectors.resize(g.columns.rows(), k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index src = n - 1 - i;
    const double s = s_asc[src];
    out.values[i] = std::max(s, 0.0) / static_cast<double>(n);
    Vec v = g.columns * w_asc.col(src) / std::sqrt(s);
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < v.size(); ++r)
      if (std::abs(v[r]) > std::abs(v[arg])) arg = r;
    if (v[arg] < 0.0) v = -v;
    out.vectors.col(i) = v;
  }
  return out;
}

ActiveSubspace build_subspace(const ModelConfig& config,
                              const ParameterVector& theta0,
                              const Partition& p, const Dataset& data, int n,
                              int k, double sigma0, std::uint64_t seed) {
  if (n > p.stochastic_count())
    throw ConfigError("sample count n = " + std::to_string(n) +
                      " exceeds stochastic dimension " +
                      std::to_string(p.stochastic_count()));
  const GradientSampleMatrix g =
      sample_gradients(config, theta0, p, data, n, sigma0, seed);
  EigenPairs eig = covariance_eigs(g, k);

  ActiveSubspace s;
  s.anchor = gather_stochastic(theta0, p);
  s.projection = std::move(eig.vectors);
  s.eigenvalues = std::move(eig.values);
  s.k = k;
  s.n = n;
  s.sigma0 = sigma0;

  const Mat ortho =
      s.projection.transpose() * s.projection - Mat::Identity(k, k);
  if (ortho.cwiseAbs().maxCoeff() > 1e-8)
    throw NumericalError("projection columns lost orthonormality");
  return s;
}

Vec project_to_full(const ActiveSubspace& s, const Vec& omega) {
  if (omega.size() != s.k)
    throw ContractError("omega length " + std::to_string(omega.size()) +
                        " does not match subspace dimension " +
                        std::to_string(s.k));
  return s.anchor + s.projection * omega;
}

}  // namespace asuq
