#include "iois/feed_forward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iois/error.hpp"

namespace iois {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

std::string_view to_string(OutputHead h) {
  return h == OutputHead::linear ? "linear" : "log_softmax";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw SpecError("unknown activation '" + std::string(s) + "'");
}

OutputHead parse_output_head(std::string_view s) {
  if (s == "linear") return OutputHead::linear;
  if (s == "log_softmax") return OutputHead::log_softmax;
  throw SpecError("unknown output head '" + std::string(s) + "'");
}

namespace {

// out[n, o] = in[n, i] * W[i, o] + b. Each output element accumulates in
// ascending input index, so a row's result does not depend on the batch size.
NumArray affine(const NumArray& in, const DenseLayer& layer) {
  const std::size_t n = in.rows();
  const std::size_t d_in = layer.weight.rows();
  const std::size_t d_out = layer.weight.cols();
  NumArray out({n, d_out});
  const double* w = layer.weight.data().data();
  const double* b = layer.bias.data().data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = in.data().data() + r * d_in;
    double* y = out.data().data() + r * d_out;
    std::copy_n(b, d_out, y);
    for (std::size_t k = 0; k < d_in; ++k) {
      const double a = x[k];
      if (a == 0.0) continue;
      const double* wk = w + k * d_out;
      for (std::size_t j = 0; j < d_out; ++j) y[j] += a * wk[j];
    }
  }
  return out;
}

void activate_inplace(NumArray& z, Activation act) {
  for (double& v : z.data()) v = act == Activation::relu ? (v > 0.0 ? v : 0.0) : std::tanh(v);
}

void log_softmax_inplace(NumArray& z) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (double& v : row) v -= lse;
  }
}

NumArray as_matrix(const NumArray& input, std::size_t expected_width) {
  if (input.rank() == 1) {
    if (input.size() != expected_width) {
      throw DimensionError("network expects input width " + std::to_string(expected_width) +
                           ", got " + std::to_string(input.size()));
    }
    return NumArray({1, input.size()}, std::vector<double>(input.data().begin(), input.data().end()));
  }
  if (input.rank() != 2 || input.cols() != expected_width) {
    throw DimensionError("network expects input width " + std::to_string(expected_width) +
                         ", got " + std::to_string(input.cols()));
  }
  return input;
}

void require_finite(const NumArray& a, std::size_t layer) {
  if (!a.all_finite()) {
    throw NumericError("non-finite value produced in layer " + std::to_string(layer));
  }
}

}  // namespace

FeedForwardNet::FeedForwardNet(std::vector<std::size_t> layer_dims, Activation activation,
                               OutputHead head)
    : dims_(std::move(layer_dims)), activation_(activation), head_(head) {
  if (dims_.size() < 2) throw DimensionError("a network needs at least an input and an output width");
  for (std::size_t d : dims_) {
    if (d == 0) throw DimensionError("layer widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layers_.push_back({NumArray({dims_[l], dims_[l + 1]}), NumArray({dims_[l + 1]})});
  }
}

FeedForwardNet FeedForwardNet::random(std::vector<std::size_t> layer_dims, Activation activation,
                                      OutputHead head, Rng& rng) {
  FeedForwardNet net(std::move(layer_dims), activation, head);
  for (auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& w : layer.weight.data()) w = u(rng);
    for (double& b : layer.bias.data()) b = u(rng);
  }
  return net;
}

std::size_t FeedForwardNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) n += dims_[l] * dims_[l + 1] + dims_[l + 1];
  return n;
}

NumArray FeedForwardNet::forward(const NumArray& input) const {
  NumArray x = as_matrix(input, input_dim());
  if (!x.all_finite()) throw NumericError("network input is not finite");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = affine(x, layers_[l]);
    if (l + 1 < layers_.size()) {
      activate_inplace(x, activation_);
    } else if (head_ == OutputHead::log_softmax) {
      log_softmax_inplace(x);
    }
  }
  require_finite(x, layers_.size() - 1);
  if (input.rank() == 1) return NumArray({x.size()}, std::vector<double>(x.data().begin(), x.data().end()));
  return x;
}

NetGradients NetGradients::zeros_like(const FeedForwardNet& net) {
  NetGradients g;
  for (const auto& layer : net.layers()) {
    g.layers.push_back({NumArray(layer.weight.shape()), NumArray(layer.bias.shape())});
  }
  return g;
}

std::size_t NetGradients::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

double NetGradients::flat(std::size_t index) const {
  for (const auto& l : layers) {
    if (index < l.weight.size()) return l.weight[index];
    index -= l.weight.size();
    if (index < l.bias.size()) return l.bias[index];
    index -= l.bias.size();
  }
  throw DimensionError("gradient index out of range");
}

double& parameter_at(FeedForwardNet& net, std::size_t index) {
  for (auto& l : net.layers()) {
    if (index < l.weight.size()) return l.weight[index];
    index -= l.weight.size();
    if (index < l.bias.size()) return l.bias[index];
    index -= l.bias.size();
  }
  throw DimensionError("parameter index out of range");
}

GradientTape::GradientTape(const FeedForwardNet& net, const NumArray& input)
    : net_(&net), input_was_vector_(input.rank() == 1) {
  activations_.push_back(as_matrix(input, net.input_dim()));
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    NumArray z = affine(activations_.back(), layers[l]);
    require_finite(z, l);
    NumArray a = z;
    if (l + 1 < layers.size()) {
      activate_inplace(a, net.activation());
    } else if (net.head() == OutputHead::log_softmax) {
      log_softmax_inplace(a);
    }
    require_finite(a, l);
    pre_.push_back(std::move(z));
    activations_.push_back(std::move(a));
  }
}

GradientTape::Result GradientTape::backward(const NumArray& output_grad,
                                            bool want_param_grads) const {
  const auto& layers = net_->layers();
  const NumArray& out = activations_.back();
  if (output_grad.size() != out.size()) {
    throw DimensionError("output gradient has " + std::to_string(output_grad.size()) +
                         " elements, output has " + std::to_string(out.size()));
  }
  Result result{want_param_grads ? NetGradients::zeros_like(*net_) : NetGradients{}, {}};

  NumArray delta(out.shape(), std::vector<double>(output_grad.data().begin(), output_grad.data().end()));
  if (net_->head() == OutputHead::log_softmax) {
    // d/dz of (z - lse(z)) applied to g: g - softmax(z) * sum(g).
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto g = delta.row(r);
      auto y = out.row(r);
      double s = 0.0;
      for (double v : g) s += v;
      for (std::size_t j = 0; j < g.size(); ++j) g[j] -= std::exp(y[j]) * s;
    }
  }

  for (std::size_t li = layers.size(); li-- > 0;) {
    const DenseLayer& layer = layers[li];
    const NumArray& x = activations_[li];
    const std::size_t n = x.rows();
    const std::size_t d_in = layer.weight.rows();
    const std::size_t d_out = layer.weight.cols();

    if (li + 1 < layers.size()) {
      const NumArray& z = pre_[li];
      const NumArray& a = activations_[li + 1];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (net_->activation() == Activation::relu) {
          if (!(z[i] > 0.0)) delta[i] = 0.0;
        } else {
          delta[i] *= 1.0 - a[i] * a[i];
        }
      }
    }

    if (want_param_grads) {
      double* dw = result.params.layers[li].weight.data().data();
      double* db = result.params.layers[li].bias.data().data();
      for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x.data().data() + r * d_in;
        const double* dr = delta.data().data() + r * d_out;
        for (std::size_t k = 0; k < d_in; ++k) {
          const double a = xr[k];
          if (a == 0.0) continue;
          double* dwk = dw + k * d_out;
          for (std::size_t j = 0; j < d_out; ++j) dwk[j] += a * dr[j];
        }
        for (std::size_t j = 0; j < d_out; ++j) db[j] += dr[j];
      }
    }

    NumArray dx({n, d_in});
    const double* w = layer.weight.data().data();
    for (std::size_t r = 0; r < n; ++r) {
      const double* dr = delta.data().data() + r * d_out;
      double* xr = dx.data().data() + r * d_in;
      for (std::size_t k = 0; k < d_in; ++k) {
        const double* wk = w + k * d_out;
        double s = 0.0;
        for (std::size_t j = 0; j < d_out; ++j) s += dr[j] * wk[j];
        xr[k] = s;
      }
    }
    delta = std::move(dx);
  }

  if (input_was_vector_) {
    result.input = NumArray({delta.size()}, std::vector<double>(delta.data().begin(), delta.data().end()));
  } else {
    result.input = std::move(delta);
  }
  return result;
}

ScalarGradient scalar_gradient(const FeedForwardNet& net, const NumArray& input,
                               const ScalarFn& scalar_fn) {
  GradientTape tape(net, input);
  NumArray out = tape.output();
  if (input.rank() == 1) out = NumArray({out.size()}, std::vector<double>(out.data().begin(), out.data().end()));
  NumArray d_out(out.shape());
  const double value = scalar_fn(out, d_out);
  if (!std::isfinite(value)) throw NumericError("scalar function returned a non-finite value");
  auto r = tape.backward(d_out);
  return {value, std::move(r.params), std::move(r.input)};
}

SgdMomentum::SgdMomentum(const FeedForwardNet& net, double momentum)
    : momentum_(momentum), velocity_(NetGradients::zeros_like(net)) {}

void SgdMomentum::step(FeedForwardNet& net, const NetGradients& grads, double learning_rate) {
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto update = [&](NumArray& param, NumArray& vel, const NumArray& g) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        vel[i] = momentum_ * vel[i] + g[i];
        param[i] -= learning_rate * vel[i];
      }
    };
    update(layers[l].weight, velocity_.layers[l].weight, grads.layers[l].weight);
    update(layers[l].bias, velocity_.layers[l].bias, grads.layers[l].bias);
  }
}

double step_decay_lr(double base, std::size_t epoch, std::size_t total_epochs) {
  double lr = base;
  for (double frac : {0.3, 0.6, 0.9}) {
    const auto milestone = static_cast<std::size_t>(std::lround(frac * static_cast<double>(total_epochs)));
    if (epoch >= milestone && milestone > 0) lr *= 0.1;
  }
  return lr;
}

}  // namespace iois
