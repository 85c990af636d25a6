#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "iois/classifier.hpp"
#include "iois/feed_forward.hpp"
#include "iois/num_array.hpp"
#include "iois/rng.hpp"

namespace iois {

// Linear variance schedule. Vectors are indexed by t - 1 for t in [1, steps].
struct NoiseSchedule {
  std::size_t steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> beta;
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha
  std::vector<double> sigma;      // sqrt(beta)

  double beta_at(std::size_t t) const { return beta[t - 1]; }
  double alpha_at(std::size_t t) const { return alpha[t - 1]; }
  double alpha_bar_at(std::size_t t) const { return alpha_bar[t - 1]; }
  double sigma_at(std::size_t t) const { return sigma[t - 1]; }
};

NoiseSchedule build_schedule(std::size_t steps, double beta_start, double beta_end);

// The 1000-step linear schedule (1e-4 .. 0.02) rescaled by 1000 / steps so the
// total injected variance stays comparable for short chains.
NoiseSchedule default_schedule(std::size_t steps = 100);

// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
NumArray forward_corrupt(const NumArray& x0, std::size_t t, const NumArray& eps,
                         const NoiseSchedule& sched);

// Anything that predicts the injected noise for a batch [n, d] at step t.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual NumArray predict_noise(const NumArray& x_t, std::size_t t) const = 0;
};

// Sinusoidal embedding of t / steps, dim entries (sin half then cos half).
std::vector<double> time_embedding(std::size_t t, std::size_t steps, std::size_t dim);

// Noise predictor over [x_t | embed(t)].
class DenoiserModel : public NoisePredictor {
 public:
  DenoiserModel() = default;
  DenoiserModel(FeedForwardNet net, std::size_t data_dim, std::size_t time_embed_dim,
                std::size_t steps);

  NumArray predict_noise(const NumArray& x_t, std::size_t t) const override;
  // One step per row.
  NumArray predict_noise(const NumArray& x_t, std::span<const std::size_t> t) const;
  NumArray network_input(const NumArray& x_t, std::span<const std::size_t> t) const;

  const FeedForwardNet& net() const { return net_; }
  FeedForwardNet& net() { return net_; }
  std::size_t data_dim() const { return data_dim_; }
  std::size_t time_embed_dim() const { return time_embed_dim_; }
  std::size_t steps() const { return steps_; }

  friend bool operator==(const DenoiserModel& a, const DenoiserModel& b) {
    return a.net_ == b.net_ && a.data_dim_ == b.data_dim_ && a.time_embed_dim_ == b.time_embed_dim_ &&
           a.steps_ == b.steps_;
  }

 private:
  FeedForwardNet net_;
  std::size_t data_dim_ = 0;
  std::size_t time_embed_dim_ = 0;
  std::size_t steps_ = 0;
};

struct DenoiserArch {
  std::vector<std::size_t> hidden{128, 128};
  std::size_t time_embed_dim = 16;
};

DenoiserModel make_denoiser(std::size_t data_dim, std::size_t steps, const DenoiserArch& arch,
                            std::uint64_t seed);

struct DiffusionLoss {
  double loss = 0.0;
  NetGradients grads;
};

// Mean over the batch of ||eps - eps_theta(x_t, t)||^2 with the given draws.
DiffusionLoss diffusion_loss(const DenoiserModel& model, const NumArray& batch_x0,
                             std::span<const std::size_t> t, const NumArray& eps,
                             const NoiseSchedule& sched);
// Draws t ~ U{1..T} and eps ~ N(0, I) per sample from rng.
DiffusionLoss diffusion_loss(const DenoiserModel& model, const NumArray& batch_x0,
                             const NoiseSchedule& sched, Rng& rng);

// (1/sqrt(a_t)) (x_t - (1 - a_t)/sqrt(1 - abar_t) eps_hat) + sigma_t z, row-wise.
NumArray reverse_update(const NumArray& x_t, std::size_t t, const NumArray& eps_hat,
                        const NoiseSchedule& sched, const NumArray& z);

NumArray reverse_step(const NumArray& x_t, std::size_t t, const NoisePredictor& model,
                      const NoiseSchedule& sched, const NumArray& z);

struct GuidanceConfig {
  double scale = 0.0;
  bool scale_by_noise_level = false;

  friend bool operator==(const GuidanceConfig&, const GuidanceConfig&) = default;
};

// eps_hat = eps_theta - s * grad log p(y | x_t) (times sqrt(1 - abar_t) when
// scale_by_noise_level), then the ordinary reverse update with eps_hat.
// labels holds one class per row of x_t.
NumArray guided_noise(const NumArray& x_t, std::size_t t, std::span<const int> labels,
                      const NoisePredictor& model, const ClassifierModel& classifier,
                      const GuidanceConfig& guidance, const NoiseSchedule& sched);
NumArray guided_reverse_step(const NumArray& x_t, std::size_t t, std::span<const int> labels,
                             const NoisePredictor& model, const ClassifierModel& classifier,
                             const GuidanceConfig& guidance, const NoiseSchedule& sched,
                             const NumArray& z);

struct SampleRequest {
  std::size_t count = 0;
  std::size_t data_dim = 0;
  // Empty for unguided sampling; otherwise one guidance class per chain.
  std::vector<int> labels;
  const ClassifierModel* classifier = nullptr;
  GuidanceConfig guidance;
  std::uint64_t seed = 0;
  // Chain c draws from derive_seed(seed, {kSynthesisStream, stream, c}).
  std::uint64_t stream = 0;
  std::size_t workers = 1;
};

// Runs count independent chains from x_T ~ N(0, I) down to x_0. Output row c is
// chain c and depends only on (seed, stream, c), never on workers.
NumArray sample(const NoisePredictor& model, const NoiseSchedule& sched, const SampleRequest& req);

struct DenoiserTraining {
  DenoiserArch arch;
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double momentum = 0.9;
};

struct PretrainResult {
  DenoiserModel model;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

// Label-free denoiser training on the rows of features. Throws DivergenceError
// when the epoch loss exceeds 10x the first epoch's for 3 consecutive epochs.
PretrainResult pretrain_dm(const NumArray& features, const NoiseSchedule& sched,
                           const DenoiserTraining& cfg, std::uint64_t seed);

// Average loss over the rows of features with draws from derive_seed(seed).
double evaluate_diffusion_loss(const DenoiserModel& model, const NumArray& features,
                               const NoiseSchedule& sched, std::uint64_t seed);

}  // namespace iois
