#include "iois/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "iois/error.hpp"
#include "iois/rng.hpp"

namespace iois {

std::vector<int> ClassifierModel::predict(const NumArray& x) const {
  const NumArray lp = log_probs(x);
  std::vector<int> out(lp.rows());
  for (std::size_t r = 0; r < lp.rows(); ++r) {
    auto row = lp.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

ClassifierModel make_classifier(std::size_t dim, std::size_t num_classes,
                                const std::vector<std::size_t>& hidden, std::uint64_t seed,
                                Activation activation) {
  std::vector<std::size_t> dims{dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(num_classes);
  Rng rng = make_rng(seed, {kClassifierInitStream});
  return {FeedForwardNet::random(std::move(dims), activation, OutputHead::log_softmax, rng),
          num_classes};
}

ClassifierModel classifier_from_net(FeedForwardNet net) {
  if (net.head() != OutputHead::log_softmax) {
    throw SpecError("a classifier network needs a log_softmax head");
  }
  const std::size_t c = net.output_dim();
  return {std::move(net), c};
}

CrossEntropy cross_entropy(const ClassifierModel& model, const NumArray& x, std::span<const int> y) {
  if (x.rows() != y.size()) throw DimensionError("cross_entropy: one label per row is required");
  if (y.empty()) throw SpecError("cross_entropy: empty batch");
  GradientTape tape(model.net, x);
  const NumArray& lp = tape.output();
  NumArray d_out(lp.shape());
  const double inv_n = 1.0 / static_cast<double>(y.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    const auto c = static_cast<std::size_t>(y[r]);
    if (c >= model.num_classes) throw SpecError("cross_entropy: label out of range");
    loss -= lp(r, c);
    d_out(r, c) = -inv_n;
  }
  loss *= inv_n;
  if (!std::isfinite(loss)) throw NumericError("cross-entropy loss is not finite");
  auto back = tape.backward(d_out);
  return {loss, std::move(back.params)};
}

double train_epoch(ClassifierModel& model, SgdMomentum& optimizer, const LabeledDataset& ds,
                   const ClassifierStep& step, std::uint64_t shuffle_seed,
                   const BatchTransform& transform) {
  if (ds.empty()) throw SpecError("train_epoch: empty dataset");
  if (ds.num_classes() != model.num_classes) throw SpecError("train_epoch: class count mismatch");
  if (step.batch_size == 0) throw SpecError("train_epoch: batch size must be positive");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);

  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += step.batch_size) {
    const std::size_t stop = std::min(order.size(), start + step.batch_size);
    std::span<const std::size_t> idx(order.data() + start, stop - start);
    NumArray x = gather_rows(ds.features(), idx);
    std::vector<int> y;
    y.reserve(idx.size());
    for (std::size_t i : idx) y.push_back(ds.labels()[i]);
    if (transform) transform(x);
    auto ce = cross_entropy(model, x, y);
    loss_sum += ce.loss * static_cast<double>(idx.size());
    optimizer.step(model.net, ce.grads, step.learning_rate);
  }
  return loss_sum / static_cast<double>(ds.size());
}

std::vector<double> per_class_accuracy(std::span<const int> truth, std::span<const int> predicted,
                                       std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw DimensionError("per_class_accuracy: length mismatch");
  std::vector<std::size_t> correct(num_classes, 0), total(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    if (t >= num_classes) throw SpecError("per_class_accuracy: label out of range");
    ++total[t];
    if (predicted[i] == truth[i]) ++correct[t];
  }
  std::vector<double> acc(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (total[c] > 0) acc[c] = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  }
  return acc;
}

std::vector<double> per_class_accuracy(const ClassifierModel& model, const LabeledDataset& ds) {
  if (ds.empty()) return std::vector<double>(model.num_classes, 0.0);
  return per_class_accuracy(ds.labels(), model.predict(ds.features()), model.num_classes);
}

NumArray logprob_input_gradient(const ClassifierModel& model, const NumArray& x,
                                std::span<const int> y) {
  GradientTape tape(model.net, x);
  const NumArray& lp = tape.output();
  if (lp.rows() != y.size()) throw DimensionError("logprob_input_gradient: one label per row is required");
  NumArray d_out(lp.shape());
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (y[r] < 0 || static_cast<std::size_t>(y[r]) >= model.num_classes) {
      throw SpecError("class " + std::to_string(y[r]) + " outside [0, " +
                      std::to_string(model.num_classes) + ")");
    }
    d_out(r, static_cast<std::size_t>(y[r])) = 1.0;
  }
  return tape.backward(d_out, /*want_param_grads=*/false).input;
}

}  // namespace iois
