#include "iois/metrics.hpp"

#include <cmath>
#include <string>

#include "iois/error.hpp"

namespace iois {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : c_(num_classes), counts_(num_classes * num_classes, 0) {}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < c_; ++j) s += at(i, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < c_; ++i) s += at(i, j);
  return s;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw SpecError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                    std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw SpecError("confusion: label out of range at position " + std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

double macro_f1(const ConfusionMatrix& cm) {
  const std::size_t c = cm.num_classes();
  if (c == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const double tp = static_cast<double>(cm.at(i, i));
    const double actual = static_cast<double>(cm.row_sum(i));
    const double predicted = static_cast<double>(cm.col_sum(i));
    if (actual == 0.0) continue;
    const double precision = predicted > 0.0 ? tp / predicted : 0.0;
    const double recall = tp / actual;
    if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(c);
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  const std::size_t c = cm.num_classes();
  if (c == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const double actual = static_cast<double>(cm.row_sum(i));
    if (actual > 0.0) sum += static_cast<double>(cm.at(i, i)) / actual;
  }
  return sum / static_cast<double>(c);
}

double mcc(const ConfusionMatrix& cm) {
  const std::size_t c = cm.num_classes();
  const double n = static_cast<double>(cm.total());
  double trace = 0.0, tp_sum = 0.0, p_sq = 0.0, t_sq = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const double t = static_cast<double>(cm.row_sum(k));
    const double p = static_cast<double>(cm.col_sum(k));
    trace += static_cast<double>(cm.at(k, k));
    tp_sum += t * p;
    p_sq += p * p;
    t_sq += t * t;
  }
  const double a = n * n - p_sq;
  const double b = n * n - t_sq;
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return (n * trace - tp_sum) / std::sqrt(a * b);
}

MetricSet evaluate(const ConfusionMatrix& cm) {
  return {macro_f1(cm), balanced_accuracy(cm), mcc(cm)};
}

}  // namespace iois
