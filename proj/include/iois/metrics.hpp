#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace iois {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  std::size_t num_classes() const { return c_; }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * c_ + pred]; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * c_ + pred]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t i) const;
  std::uint64_t col_sum(std::size_t j) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t c_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t num_classes);

// Unweighted mean of per-class F1; a class with P + R = 0 contributes 0.
double macro_f1(const ConfusionMatrix& cm);

// Mean per-class recall; classes without true samples contribute 0.
double balanced_accuracy(const ConfusionMatrix& cm);

// Multiclass Matthews correlation (row/column-sum form); 0 when either
// denominator factor vanishes.
double mcc(const ConfusionMatrix& cm);

struct MetricSet {
  double macro_f1 = 0.0;
  double balanced_accuracy = 0.0;
  double mcc = 0.0;
};

MetricSet evaluate(const ConfusionMatrix& cm);

}  // namespace iois
