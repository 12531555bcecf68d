#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "leap/env/nav2d.hpp"
#include "leap/nn/network.hpp"

namespace leap::vae {

using Rng = nn::Rng;

struct VaeConfig {
  int obs_dim = 2;
  int latent_dim = 8;
  std::vector<int> hidden_sizes{64, 128, 64};
  double kl_weight = 1.0;
  double learning_rate = 1e-3;
  int batch_size = 128;
  double logvar_min = -20.0;
  double logvar_max = 5.0;
  double holdout_fraction = 0.1;
};

struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_variance;
};

// x_norm = (x - center) / scale, per dimension (zero mean, unit range).
struct Normalization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
};

struct VaeModel {
  VaeConfig config;
  nn::NetworkParams encoder;  // obs -> [mean; log_variance]
  nn::NetworkParams decoder;  // latent -> obs (normalized coordinates)
  Normalization norm;
};

Normalization fit_normalization(const std::vector<env::NavState>& dataset);
VaeModel init_vae(const VaeConfig& config, const Normalization& norm, Rng& rng);

GaussianParams encode(const Eigen::Vector2d& state, const VaeModel& model);

// z = mean + exp(0.5 * log_var) * standard normal noise
Eigen::VectorXd reparameterized_sample(const GaussianParams& gauss, Rng& rng);

// Decoder mean, mapped back to raw observation units.
Eigen::Vector2d decode_mle(const Eigen::VectorXd& z, const VaeModel& model);
Eigen::Matrix2Xd decode_mle_batch(const Eigen::MatrixXd& z, const VaeModel& model);

// Decoder mean plus its Jacobian wrt z (raw units), for gradient-based planning.
Eigen::Vector2d decode_mle_grad(const Eigen::VectorXd& z, const VaeModel& model,
                                Eigen::MatrixXd& jacobian);

// log density of the standard multivariate normal prior
double log_prior(const Eigen::VectorXd& z);

// KL(N(mean, diag(exp(log_var))) || N(0, I)), closed form
double gaussian_kl(const GaussianParams& gauss);

struct ElboParts {
  double total = 0;
  double reconstruction = 0;  // squared reconstruction error in raw units
  double kl = 0;
};

// Single-sample ELBO estimate over a batch (columns are states, raw units).
ElboParts elbo_loss(const Eigen::Matrix2Xd& batch, const VaeModel& model, Rng& rng);

struct VaeTrainLogRow {
  long step = 0;
  double loss = 0, reconstruction = 0, kl = 0;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<VaeTrainLogRow> log;
  double final_holdout_loss = 0;
  double final_holdout_mse = 0;  // mean ||s - decode(encode_mean(s))||^2, raw units
};

// Adam-trained VAE on a dataset of valid states (>= 1000 required); the last
// holdout_fraction of a shuffled split is held out for model selection.
VaeTrainResult train_vae(const std::vector<env::NavState>& dataset, const VaeConfig& config,
                         long budget_steps, Rng& rng);

// Model-selection hook: index of the smallest final holdout loss.
int select_best_seed(const std::vector<double>& final_holdout_losses);

// Checkpoint = both nets + normalization + config.
void save_vae(const std::string& path, const VaeModel& model);
VaeModel load_vae(const std::string& path);

}  // namespace leap::vae
