#include "leap/vae/vae.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "leap/nn/checkpoint.hpp"
#include "leap/nn/optim.hpp"

namespace leap::vae {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

nn::NetworkSpec encoder_spec(const VaeConfig& c) {
  return {c.obs_dim, c.hidden_sizes, 2 * c.latent_dim, nn::Activation::Relu, nn::Activation::None};
}

nn::NetworkSpec decoder_spec(const VaeConfig& c) {
  return {c.latent_dim, c.hidden_sizes, c.obs_dim, nn::Activation::Relu, nn::Activation::None};
}

MatrixXd normalize(const MatrixXd& x, const Normalization& n) {
  return (x.colwise() - n.center).array().colwise() / n.scale.array();
}

}  // namespace

Normalization fit_normalization(const std::vector<env::NavState>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d lo = dataset.front().position, hi = dataset.front().position;
  for (const auto& s : dataset) {
    mean += s.position;
    lo = lo.cwiseMin(s.position);
    hi = hi.cwiseMax(s.position);
  }
  mean /= static_cast<double>(dataset.size());
  Normalization n;
  n.center = mean;
  n.scale = ((hi - lo) / 2.0).cwiseMax(1e-8);
  return n;
}

VaeModel init_vae(const VaeConfig& config, const Normalization& norm, Rng& rng) {
  if (config.latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  VaeModel model;
  model.config = config;
  model.encoder = nn::init_network(encoder_spec(config), rng);
  model.decoder = nn::init_network(decoder_spec(config), rng);
  model.norm = norm;
  return model;
}

GaussianParams encode(const Eigen::Vector2d& state, const VaeModel& model) {
  const int r = model.config.latent_dim;
  VectorXd xn = (state - Eigen::Vector2d(model.norm.center)).cwiseQuotient(model.norm.scale);
  VectorXd out = nn::forward(model.encoder, xn);
  GaussianParams g;
  g.mean = out.head(r);
  g.log_variance = out.tail(r)
                       .cwiseMax(model.config.logvar_min)
                       .cwiseMin(model.config.logvar_max);
  return g;
}

Eigen::VectorXd reparameterized_sample(const GaussianParams& gauss, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  VectorXd eps(gauss.mean.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = n(rng);
  return gauss.mean.array() + (0.5 * gauss.log_variance.array()).exp() * eps.array();
}

Eigen::Vector2d decode_mle(const Eigen::VectorXd& z, const VaeModel& model) {
  VectorXd out = nn::forward(model.decoder, z);
  return (out.cwiseProduct(model.norm.scale) + model.norm.center);
}

Eigen::Matrix2Xd decode_mle_batch(const Eigen::MatrixXd& z, const VaeModel& model) {
  MatrixXd out = nn::forward_batch(model.decoder, z);
  return ((out.array().colwise() * model.norm.scale.array()).colwise() +
          model.norm.center.array())
      .matrix();
}

Eigen::Vector2d decode_mle_grad(const Eigen::VectorXd& z, const VaeModel& model,
                                Eigen::MatrixXd& jacobian) {
  const int r = model.config.latent_dim;
  auto cache = nn::forward_cached(model.decoder, z);
  jacobian.resize(2, r);
  for (int row = 0; row < 2; ++row) {
    MatrixXd upstream = MatrixXd::Zero(2, 1);
    upstream(row, 0) = 1.0;
    auto grads = nn::zero_grads(model.decoder);
    MatrixXd input_grad(r, 1);
    nn::backward(model.decoder, cache, upstream, grads, &input_grad);
    jacobian.row(row) = model.norm.scale(row) * input_grad.col(0).transpose();
  }
  VectorXd out = cache.output().col(0);
  return out.cwiseProduct(model.norm.scale) + model.norm.center;
}

double log_prior(const Eigen::VectorXd& z) {
  const double r = static_cast<double>(z.size());
  return -0.5 * r * kLog2Pi - 0.5 * z.squaredNorm();
}

double gaussian_kl(const GaussianParams& g) {
  return 0.5 * (g.mean.array().square() + g.log_variance.array().exp() - 1.0 -
                g.log_variance.array())
                   .sum();
}

namespace {

struct ElboBatch {
  ElboParts parts;
  // cached intermediates for the backward pass
  nn::ForwardCache enc_cache, dec_cache;
  MatrixXd xn;         // normalized inputs
  MatrixXd mu, lv;     // clamped
  MatrixXd clamp_mask; // 1 where log-variance was not clamped
  MatrixXd eps, z;
};

ElboBatch elbo_forward(const MatrixXd& x, const VaeModel& model, Rng& rng) {
  const int r = model.config.latent_dim;
  const auto B = x.cols();
  ElboBatch eb;
  eb.xn = normalize(x, model.norm);
  eb.enc_cache = nn::forward_cached(model.encoder, eb.xn);
  const MatrixXd& enc_out = eb.enc_cache.output();
  eb.mu = enc_out.topRows(r);
  MatrixXd lv_raw = enc_out.bottomRows(r);
  eb.clamp_mask = ((lv_raw.array() > model.config.logvar_min) &&
                   (lv_raw.array() < model.config.logvar_max))
                      .cast<double>();
  eb.lv = lv_raw.cwiseMax(model.config.logvar_min).cwiseMin(model.config.logvar_max);

  std::normal_distribution<double> n(0.0, 1.0);
  eb.eps.resize(r, B);
  for (Eigen::Index c = 0; c < B; ++c)
    for (int i = 0; i < r; ++i) eb.eps(i, c) = n(rng);
  eb.z = eb.mu.array() + (0.5 * eb.lv.array()).exp() * eb.eps.array();

  eb.dec_cache = nn::forward_cached(model.decoder, eb.z);
  const MatrixXd& dec_out = eb.dec_cache.output();

  // reconstruction error in raw units: || scale .* (dec - xn) ||^2 per column
  MatrixXd diff = (dec_out - eb.xn).array().colwise() * model.norm.scale.array();
  eb.parts.reconstruction = diff.squaredNorm() / static_cast<double>(B);
  eb.parts.kl = 0.5 *
                (eb.mu.array().square() + eb.lv.array().exp() - 1.0 - eb.lv.array()).sum() /
                static_cast<double>(B);
  eb.parts.total = eb.parts.reconstruction + model.config.kl_weight * eb.parts.kl;
  if (!std::isfinite(eb.parts.total)) throw std::runtime_error("non-finite ELBO loss");
  return eb;
}

}  // namespace

ElboParts elbo_loss(const Eigen::Matrix2Xd& batch, const VaeModel& model, Rng& rng) {
  if (batch.cols() == 0) throw std::invalid_argument("elbo_loss: empty batch");
  return elbo_forward(batch, model, rng).parts;
}

VaeTrainResult train_vae(const std::vector<env::NavState>& dataset, const VaeConfig& config,
                         long budget_steps, Rng& rng) {
  if (dataset.size() < 1000) throw std::invalid_argument("train_vae: dataset must hold >= 1000 states");

  MatrixXd all(2, dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) all.col(i) = dataset[i].position;
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto holdout_n = std::max<std::size_t>(1, static_cast<std::size_t>(dataset.size() * config.holdout_fraction));
  const auto train_n = dataset.size() - holdout_n;
  MatrixXd train_x(2, train_n), holdout_x(2, holdout_n);
  for (std::size_t i = 0; i < train_n; ++i) train_x.col(i) = all.col(order[i]);
  for (std::size_t i = 0; i < holdout_n; ++i) holdout_x.col(i) = all.col(order[train_n + i]);

  std::vector<env::NavState> train_states(train_n);
  for (std::size_t i = 0; i < train_n; ++i) train_states[i].position = train_x.col(i);

  VaeTrainResult result;
  result.model = init_vae(config, fit_normalization(train_states), rng);
  auto& model = result.model;
  auto enc_adam = nn::make_adam_state(model.encoder, {.learning_rate = config.learning_rate});
  auto dec_adam = nn::make_adam_state(model.decoder, {.learning_rate = config.learning_rate});

  const int r = config.latent_dim;
  const int B = config.batch_size;
  std::uniform_int_distribution<std::size_t> pick(0, train_n - 1);
  MatrixXd batch(2, B);

  for (long step = 0; step < budget_steps; ++step) {
    for (int c = 0; c < B; ++c) batch.col(c) = train_x.col(pick(rng));
    ElboBatch eb = elbo_forward(batch, model, rng);

    // d loss / d decoder output
    MatrixXd d_dec = (2.0 / B) * ((eb.dec_cache.output() - eb.xn).array().colwise() *
                                  model.norm.scale.array().square())
                                     .matrix();
    auto dec_grads = nn::zero_grads(model.decoder);
    MatrixXd d_z(r, B);
    nn::backward(model.decoder, eb.dec_cache, d_dec, dec_grads, &d_z);

    const double beta = config.kl_weight;
    MatrixXd d_mu = d_z + (beta / B) * eb.mu;
    MatrixXd d_lv = (d_z.array() * (0.5 * (0.5 * eb.lv.array()).exp() * eb.eps.array()) +
                     (beta / B) * 0.5 * (eb.lv.array().exp() - 1.0)) *
                    eb.clamp_mask.array();
    MatrixXd enc_upstream(2 * r, B);
    enc_upstream.topRows(r) = d_mu;
    enc_upstream.bottomRows(r) = d_lv;
    auto enc_grads = nn::zero_grads(model.encoder);
    nn::backward(model.encoder, eb.enc_cache, enc_upstream, enc_grads);

    nn::adam_step(model.decoder, dec_grads, dec_adam);
    nn::adam_step(model.encoder, enc_grads, enc_adam);

    if ((step + 1) % 100 == 0 || step == 0)
      result.log.push_back({step + 1, eb.parts.total, eb.parts.reconstruction, eb.parts.kl});
  }

  // holdout metrics; fixed noise seed so seeds compare on equal footing
  Rng holdout_rng(0x9e3779b97f4a7c15ULL);
  result.final_holdout_loss = elbo_forward(holdout_x, model, holdout_rng).parts.total;
  double mse = 0;
  for (Eigen::Index c = 0; c < holdout_x.cols(); ++c) {
    auto g = encode(holdout_x.col(c), model);
    mse += (decode_mle(g.mean, model) - Eigen::Vector2d(holdout_x.col(c))).squaredNorm();
  }
  result.final_holdout_mse = mse / static_cast<double>(holdout_x.cols());
  return result;
}

int select_best_seed(const std::vector<double>& final_holdout_losses) {
  if (final_holdout_losses.empty()) throw std::invalid_argument("no seeds to select from");
  return static_cast<int>(std::min_element(final_holdout_losses.begin(), final_holdout_losses.end()) -
                          final_holdout_losses.begin());
}

void save_vae(const std::string& path, const VaeModel& model) {
  nlohmann::json j;
  j["format"] = "leap-vae-v1";
  j["config"] = {{"obs_dim", model.config.obs_dim},
                 {"latent_dim", model.config.latent_dim},
                 {"hidden_sizes", model.config.hidden_sizes},
                 {"kl_weight", model.config.kl_weight},
                 {"learning_rate", model.config.learning_rate},
                 {"batch_size", model.config.batch_size},
                 {"logvar_min", model.config.logvar_min},
                 {"logvar_max", model.config.logvar_max},
                 {"holdout_fraction", model.config.holdout_fraction}};
  j["encoder"] = nn::network_to_json(model.encoder);
  j["decoder"] = nn::network_to_json(model.decoder);
  j["normalization"] = {{"center", std::vector<double>(model.norm.center.data(),
                                                       model.norm.center.data() + model.norm.center.size())},
                        {"scale", std::vector<double>(model.norm.scale.data(),
                                                      model.norm.scale.data() + model.norm.scale.size())}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump();
}

VaeModel load_vae(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "leap-vae-v1") throw std::runtime_error("unrecognized VAE checkpoint");
  VaeModel model;
  const auto& c = j.at("config");
  model.config.obs_dim = c.at("obs_dim").get<int>();
  model.config.latent_dim = c.at("latent_dim").get<int>();
  model.config.hidden_sizes = c.at("hidden_sizes").get<std::vector<int>>();
  model.config.kl_weight = c.at("kl_weight").get<double>();
  model.config.learning_rate = c.at("learning_rate").get<double>();
  model.config.batch_size = c.at("batch_size").get<int>();
  model.config.logvar_min = c.at("logvar_min").get<double>();
  model.config.logvar_max = c.at("logvar_max").get<double>();
  model.config.holdout_fraction = c.at("holdout_fraction").get<double>();
  model.encoder = nn::network_from_json(j.at("encoder"));
  model.decoder = nn::network_from_json(j.at("decoder"));
  auto center = j.at("normalization").at("center").get<std::vector<double>>();
  auto scale = j.at("normalization").at("scale").get<std::vector<double>>();
  model.norm.center = Eigen::Map<VectorXd>(center.data(), center.size());
  model.norm.scale = Eigen::Map<VectorXd>(scale.data(), scale.size());
  return model;
}

}  // namespace leap::vae
