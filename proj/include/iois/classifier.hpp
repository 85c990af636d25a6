#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "iois/dataset.hpp"
#include "iois/feed_forward.hpp"

namespace iois {

// Label predictor p(y | x): a feed-forward net with a log_softmax head.
struct ClassifierModel {
  FeedForwardNet net;
  std::size_t num_classes = 0;

  NumArray log_probs(const NumArray& x) const { return net.forward(x); }
  std::vector<int> predict(const NumArray& x) const;

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

ClassifierModel make_classifier(std::size_t dim, std::size_t num_classes,
                                const std::vector<std::size_t>& hidden, std::uint64_t seed,
                                Activation activation = Activation::relu);

// Wraps an existing net; the head must be log_softmax.
ClassifierModel classifier_from_net(FeedForwardNet net);

// Applied to every mini-batch of features before the gradient step.
using BatchTransform = std::function<void(NumArray& batch)>;

struct ClassifierStep {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
};

// One shuffled pass over ds. Returns the mean cross-entropy over the epoch.
double train_epoch(ClassifierModel& model, SgdMomentum& optimizer, const LabeledDataset& ds,
                   const ClassifierStep& step, std::uint64_t shuffle_seed,
                   const BatchTransform& transform = {});

// -mean log p(y_i | x_i) together with parameter gradients.
struct CrossEntropy {
  double loss = 0.0;
  NetGradients grads;
};
CrossEntropy cross_entropy(const ClassifierModel& model, const NumArray& x, std::span<const int> y);

// acc_i = correct_i / count_i; a class with no samples scores 0.
std::vector<double> per_class_accuracy(std::span<const int> truth, std::span<const int> predicted,
                                       std::size_t num_classes);
std::vector<double> per_class_accuracy(const ClassifierModel& model, const LabeledDataset& ds);

// Row-wise gradient of log p(y_r | x_r) with respect to x_r. One label per row.
NumArray logprob_input_gradient(const ClassifierModel& model, const NumArray& x,
                                std::span<const int> y);

}  // namespace iois
