#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "iois/num_array.hpp"
#include "iois/rng.hpp"

namespace iois {

enum class Activation { relu, tanh };
enum class OutputHead { linear, log_softmax };

std::string_view to_string(Activation a);
std::string_view to_string(OutputHead h);
Activation parse_activation(std::string_view s);
OutputHead parse_output_head(std::string_view s);

// Affine layer y = x W + b with W stored [in, out].
struct DenseLayer {
  NumArray weight;
  NumArray bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Fully connected network. Hidden layers apply the activation; the final layer
// is followed by the output head.
class FeedForwardNet {
 public:
  FeedForwardNet() = default;
  // All parameters zero.
  FeedForwardNet(std::vector<std::size_t> layer_dims, Activation activation,
                 OutputHead head);

  // Uniform fan-in initialisation, bound 1/sqrt(fan_in).
  static FeedForwardNet random(std::vector<std::size_t> layer_dims, Activation activation,
                               OutputHead head, Rng& rng);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  Activation activation() const { return activation_; }
  OutputHead head() const { return head_; }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Accepts [d] or [n, d]; returns the same rank. Throws DimensionError on a
  // width mismatch and NumericError if the output is not finite.
  NumArray forward(const NumArray& input) const;

  friend bool operator==(const FeedForwardNet&, const FeedForwardNet&) = default;

 private:
  std::vector<std::size_t> dims_;
  Activation activation_ = Activation::relu;
  OutputHead head_ = OutputHead::linear;
  std::vector<DenseLayer> layers_;
};

// Parameter-shaped gradient container.
struct NetGradients {
  std::vector<DenseLayer> layers;

  static NetGradients zeros_like(const FeedForwardNet& net);
  std::size_t size() const;
  // Flattened view order: layer by layer, weight then bias.
  double flat(std::size_t index) const;
};

// Records one batched forward pass so that gradients of any scalar built from
// the output can be pulled back to the parameters and the input.
class GradientTape {
 public:
  GradientTape(const FeedForwardNet& net, const NumArray& input);

  const NumArray& output() const { return activations_.back(); }

  struct Result {
    NetGradients params;
    NumArray input;
  };
  // output_grad has the output's shape. Parameter gradients are summed over
  // batch rows in ascending row order.
  Result backward(const NumArray& output_grad, bool want_param_grads = true) const;

 private:
  const FeedForwardNet* net_;
  bool input_was_vector_;
  std::vector<NumArray> pre_;          // pre-activation per layer, [n, out]
  std::vector<NumArray> activations_;  // activations_[0] = input, back() = output
};

// Reduces a network output to a scalar and writes d(scalar)/d(output).
using ScalarFn = std::function<double(const NumArray& output, NumArray& output_grad)>;

struct ScalarGradient {
  double value = 0.0;
  NetGradients params;
  NumArray input;
};

ScalarGradient scalar_gradient(const FeedForwardNet& net, const NumArray& input,
                               const ScalarFn& scalar_fn);

// Plain stochastic gradient descent with heavy-ball momentum.
class SgdMomentum {
 public:
  SgdMomentum(const FeedForwardNet& net, double momentum);

  void step(FeedForwardNet& net, const NetGradients& grads, double learning_rate);

 private:
  double momentum_;
  NetGradients velocity_;
};

// Base rate decayed by 0.1 at 30%, 60% and 90% of the run (0-based epoch).
double step_decay_lr(double base, std::size_t epoch, std::size_t total_epochs);

// Flat-parameter accessors used by gradient checks.
double& parameter_at(FeedForwardNet& net, std::size_t flat_index);

}  // namespace iois
