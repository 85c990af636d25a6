#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace iois {

// Integer synthetic budget per class. sum(k) == total always holds.
struct AllocationPlan {
  std::vector<std::int64_t> k;
  std::int64_t total = 0;
  std::vector<double> fractions;  // pre-rounding shares, sum to 1

  friend bool operator==(const AllocationPlan&, const AllocationPlan&) = default;
};

// Floors fraction * total and hands the leftover units to the largest
// fractional remainders; ties go to the lower class index.
std::vector<std::int64_t> largest_remainder_round(std::span<const double> fractions,
                                                  std::int64_t total);

// Accuracy-adaptive split: shares = softmax(1 - acc), so weaker classes get
// more of the budget.
AllocationPlan allocate(std::span<const double> class_accuracy, std::int64_t total);

// Equal shares, rounded the same way.
AllocationPlan uniform_allocation(std::size_t num_classes, std::int64_t total);

}  // namespace iois
