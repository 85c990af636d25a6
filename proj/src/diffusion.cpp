#include "iois/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "iois/error.hpp"

namespace iois {

NoiseSchedule build_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps < 1) throw SpecError("schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw SpecError("schedule bounds must satisfy 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.beta.resize(steps);
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  s.sigma.resize(steps);
  double running = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.beta[i] = steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * frac;
    s.alpha[i] = 1.0 - s.beta[i];
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
    s.sigma[i] = std::sqrt(s.beta[i]);
  }
  return s;
}

NoiseSchedule default_schedule(std::size_t steps) {
  if (steps < 1) throw SpecError("schedule needs at least one step");
  const double scale = 1000.0 / static_cast<double>(steps);
  return build_schedule(steps, std::min(1e-4 * scale, 0.999), std::min(0.02 * scale, 0.999));
}

namespace {

void check_step(std::size_t t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps) {
    throw SpecError("step " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps) + "]");
  }
}

void check_same_shape(const NumArray& a, const NumArray& b, const char* what) {
  if (a.shape() != b.shape()) throw DimensionError(std::string(what) + ": shape mismatch");
}

}  // namespace

NumArray forward_corrupt(const NumArray& x0, std::size_t t, const NumArray& eps,
                         const NoiseSchedule& sched) {
  check_step(t, sched);
  check_same_shape(x0, eps, "forward_corrupt");
  const double a = std::sqrt(sched.alpha_bar_at(t));
  const double b = std::sqrt(1.0 - sched.alpha_bar_at(t));
  NumArray out = x0;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

std::vector<double> time_embedding(std::size_t t, std::size_t steps, std::size_t dim) {
  std::vector<double> e(dim, 0.0);
  const std::size_t half = dim / 2;
  // Position scaled onto the canonical 1000-step range.
  const double pos = 1000.0 * static_cast<double>(t) / static_cast<double>(steps);
  for (std::size_t k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
    e[k] = std::sin(pos * freq);
    e[half + k] = std::cos(pos * freq);
  }
  return e;
}

DenoiserModel::DenoiserModel(FeedForwardNet net, std::size_t data_dim, std::size_t time_embed_dim,
                             std::size_t steps)
    : net_(std::move(net)), data_dim_(data_dim), time_embed_dim_(time_embed_dim), steps_(steps) {
  if (net_.input_dim() != data_dim_ + time_embed_dim_) {
    throw DimensionError("denoiser input width must be data_dim + time_embed_dim");
  }
  if (net_.output_dim() != data_dim_) throw DimensionError("denoiser output width must equal data_dim");
  if (time_embed_dim_ % 2 != 0) throw SpecError("time embedding size must be even");
  if (steps_ < 1) throw SpecError("denoiser needs a positive step count");
}

NumArray DenoiserModel::network_input(const NumArray& x_t, std::span<const std::size_t> t) const {
  if (x_t.rank() != 2 || x_t.cols() != data_dim_) {
    throw DimensionError("denoiser expects [n, " + std::to_string(data_dim_) + "] inputs");
  }
  if (t.size() != x_t.rows()) throw DimensionError("denoiser needs one step per row");
  const std::size_t width = data_dim_ + time_embed_dim_;
  NumArray in({x_t.rows(), width});
  std::size_t cached_t = 0;
  std::vector<double> emb;
  for (std::size_t r = 0; r < x_t.rows(); ++r) {
    if (t[r] != cached_t) {
      emb = time_embedding(t[r], steps_, time_embed_dim_);
      cached_t = t[r];
    }
    auto dst = in.row(r);
    std::copy(x_t.row(r).begin(), x_t.row(r).end(), dst.begin());
    std::copy(emb.begin(), emb.end(), dst.begin() + static_cast<std::ptrdiff_t>(data_dim_));
  }
  return in;
}

NumArray DenoiserModel::predict_noise(const NumArray& x_t, std::span<const std::size_t> t) const {
  return net_.forward(network_input(x_t, t));
}

NumArray DenoiserModel::predict_noise(const NumArray& x_t, std::size_t t) const {
  std::vector<std::size_t> steps(x_t.rows(), t);
  return predict_noise(x_t, steps);
}

DenoiserModel make_denoiser(std::size_t data_dim, std::size_t steps, const DenoiserArch& arch,
                            std::uint64_t seed) {
  std::vector<std::size_t> dims{data_dim + arch.time_embed_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(data_dim);
  Rng rng = make_rng(seed, {kDenoiserInitStream});
  return DenoiserModel(FeedForwardNet::random(std::move(dims), Activation::relu, OutputHead::linear, rng),
                       data_dim, arch.time_embed_dim, steps);
}

DiffusionLoss diffusion_loss(const DenoiserModel& model, const NumArray& batch_x0,
                             std::span<const std::size_t> t, const NumArray& eps,
                             const NoiseSchedule& sched) {
  const std::size_t n = batch_x0.rows();
  if (n == 0) throw SpecError("diffusion_loss: empty batch");
  check_same_shape(batch_x0, eps, "diffusion_loss");
  if (t.size() != n) throw DimensionError("diffusion_loss: one step per row is required");
  NumArray x_t(batch_x0.shape());
  for (std::size_t r = 0; r < n; ++r) {
    check_step(t[r], sched);
    const double a = std::sqrt(sched.alpha_bar_at(t[r]));
    const double b = std::sqrt(1.0 - sched.alpha_bar_at(t[r]));
    for (std::size_t j = 0; j < batch_x0.cols(); ++j) x_t(r, j) = a * batch_x0(r, j) + b * eps(r, j);
  }
  GradientTape tape(model.net(), model.network_input(x_t, t));
  const NumArray& pred = tape.output();
  NumArray d_out(pred.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - eps[i];
    loss += diff * diff;
    d_out[i] = 2.0 * diff * inv_n;
  }
  loss *= inv_n;
  if (!std::isfinite(loss)) throw NumericError("diffusion loss is not finite");
  auto back = tape.backward(d_out);
  return {loss, std::move(back.params)};
}

DiffusionLoss diffusion_loss(const DenoiserModel& model, const NumArray& batch_x0,
                             const NoiseSchedule& sched, Rng& rng) {
  std::uniform_int_distribution<std::size_t> step_dist(1, sched.steps);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::size_t> t(batch_x0.rows());
  NumArray eps(batch_x0.shape());
  for (std::size_t r = 0; r < t.size(); ++r) {
    t[r] = step_dist(rng);
    for (std::size_t j = 0; j < batch_x0.cols(); ++j) eps(r, j) = normal(rng);
  }
  return diffusion_loss(model, batch_x0, t, eps, sched);
}

NumArray reverse_update(const NumArray& x_t, std::size_t t, const NumArray& eps_hat,
                        const NoiseSchedule& sched, const NumArray& z) {
  check_step(t, sched);
  check_same_shape(x_t, eps_hat, "reverse_update");
  check_same_shape(x_t, z, "reverse_update");
  const double alpha = sched.alpha_at(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  const double coef = (1.0 - alpha) / std::sqrt(1.0 - sched.alpha_bar_at(t));
  // No noise is added on the final step.
  const double sigma = t > 1 ? sched.sigma_at(t) : 0.0;
  NumArray out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv_sqrt_alpha * (x_t[i] - coef * eps_hat[i]) + sigma * z[i];
  }
  return out;
}

NumArray reverse_step(const NumArray& x_t, std::size_t t, const NoisePredictor& model,
                      const NoiseSchedule& sched, const NumArray& z) {
  check_step(t, sched);
  return reverse_update(x_t, t, model.predict_noise(x_t, t), sched, z);
}

NumArray guided_noise(const NumArray& x_t, std::size_t t, std::span<const int> labels,
                      const NoisePredictor& model, const ClassifierModel& classifier,
                      const GuidanceConfig& guidance, const NoiseSchedule& sched) {
  check_step(t, sched);
  if (!(guidance.scale >= 0.0)) throw SpecError("guidance scale must be non-negative");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classifier.num_classes) {
      throw SpecError("guidance class " + std::to_string(y) + " outside [0, " +
                      std::to_string(classifier.num_classes) + ")");
    }
  }
  NumArray eps = model.predict_noise(x_t, t);
  if (guidance.scale == 0.0) return eps;
  const NumArray grad = logprob_input_gradient(classifier, x_t, labels);
  double s = guidance.scale;
  if (guidance.scale_by_noise_level) s *= std::sqrt(1.0 - sched.alpha_bar_at(t));
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] -= s * grad[i];
  return eps;
}

NumArray guided_reverse_step(const NumArray& x_t, std::size_t t, std::span<const int> labels,
                             const NoisePredictor& model, const ClassifierModel& classifier,
                             const GuidanceConfig& guidance, const NoiseSchedule& sched,
                             const NumArray& z) {
  return reverse_update(x_t, t, guided_noise(x_t, t, labels, model, classifier, guidance, sched),
                        sched, z);
}

NumArray sample(const NoisePredictor& model, const NoiseSchedule& sched, const SampleRequest& req) {
  const std::size_t n = req.count;
  const std::size_t d = req.data_dim;
  if (d == 0) throw DimensionError("sample: data dimension must be positive");
  const bool guided = !req.labels.empty();
  if (guided && req.labels.size() != n) throw SpecError("sample: one guidance class per chain is required");
  if (guided && req.classifier == nullptr) throw SpecError("sample: guided sampling needs a classifier");
  if (guided && req.classifier->net.input_dim() != d) {
    throw DimensionError("sample: classifier input width differs from the data dimension");
  }
  NumArray out({n, d});
  if (n == 0) return out;

  auto run_block = [&](std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    std::vector<Rng> rngs;
    std::vector<std::normal_distribution<double>> normals(m, std::normal_distribution<double>(0.0, 1.0));
    rngs.reserve(m);
    NumArray x({m, d});
    for (std::size_t c = 0; c < m; ++c) {
      rngs.push_back(make_rng(req.seed, {kSynthesisStream, req.stream, begin + c}));
      for (std::size_t j = 0; j < d; ++j) x(c, j) = normals[c](rngs[c]);
    }
    std::span<const int> labels;
    if (guided) labels = std::span<const int>(req.labels).subspan(begin, m);
    NumArray z({m, d});
    for (std::size_t t = sched.steps; t >= 1; --t) {
      for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t j = 0; j < d; ++j) z(c, j) = t > 1 ? normals[c](rngs[c]) : 0.0;
      }
      x = guided ? guided_reverse_step(x, t, labels, model, *req.classifier, req.guidance, sched, z)
                 : reverse_step(x, t, model, sched, z);
    }
    for (std::size_t c = 0; c < m; ++c) {
      std::copy(x.row(c).begin(), x.row(c).end(), out.row(begin + c).begin());
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(req.workers, 1, n);
  if (workers == 1) {
    run_block(0, n);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    if (begin == end) continue;
    threads.emplace_back([&, w, begin, end] {
      try {
        run_block(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

PretrainResult pretrain_dm(const NumArray& features, const NoiseSchedule& sched,
                           const DenoiserTraining& cfg, std::uint64_t seed) {
  if (features.rank() != 2 || features.rows() == 0) throw SpecError("pretrain_dm: no training features");
  if (cfg.batch_size == 0) throw SpecError("pretrain_dm: batch size must be positive");
  PretrainResult result{make_denoiser(features.cols(), sched.steps, cfg.arch, seed), {}};
  SgdMomentum optimizer(result.model.net(), cfg.momentum);
  std::vector<std::size_t> order(features.rows());
  std::size_t blowups = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = make_rng(seed, {kDenoiserTrainStream, epoch});
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = step_decay_lr(cfg.learning_rate, epoch, cfg.epochs);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      auto step = diffusion_loss(result.model, gather_rows(features, idx), sched, rng);
      loss_sum += step.loss * static_cast<double>(idx.size());
      optimizer.step(result.model.net(), step.grads, lr);
    }
    const double mean = loss_sum / static_cast<double>(order.size());
    result.loss_trace.push_back(mean);
    blowups = mean > 10.0 * result.loss_trace.front() ? blowups + 1 : 0;
    if (blowups >= 3) {
      throw DivergenceError("denoiser training diverged at epoch " + std::to_string(epoch + 1));
    }
  }
  return result;
}

double evaluate_diffusion_loss(const DenoiserModel& model, const NumArray& features,
                               const NoiseSchedule& sched, std::uint64_t seed) {
  Rng rng(seed);
  return diffusion_loss(model, features, sched, rng).loss;
}

}  // namespace iois
