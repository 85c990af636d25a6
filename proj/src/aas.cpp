#include "iois/aas.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iois/error.hpp"

namespace iois {

std::vector<std::int64_t> largest_remainder_round(std::span<const double> fractions,
                                                  std::int64_t total) {
  if (total < 0) throw SpecError("allocation budget must be non-negative");
  const std::size_t c = fractions.size();
  std::vector<std::int64_t> k(c, 0);
  std::vector<double> remainder(c, 0.0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < c; ++i) {
    if (!(fractions[i] >= 0.0)) throw SpecError("allocation fractions must be non-negative");
    const double raw = fractions[i] * static_cast<double>(total);
    const double fl = std::floor(raw);
    k[i] = static_cast<std::int64_t>(fl);
    remainder[i] = raw - fl;
    assigned += k[i];
  }
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // Fractions that sum to 1 within rounding can push the floors one unit past
  // the budget; take it back from the smallest remainders.
  for (std::size_t i = c; assigned > total && i-- > 0;) {
    if (k[order[i]] > 0) {
      --k[order[i]];
      --assigned;
    }
  }
  for (std::size_t i = 0; assigned < total; i = (i + 1) % c) {
    ++k[order[i]];
    ++assigned;
  }
  return k;
}

AllocationPlan allocate(std::span<const double> class_accuracy, std::int64_t total) {
  const std::size_t c = class_accuracy.size();
  if (c == 0) throw SpecError("allocation needs at least one class");
  std::vector<double> z(c);
  for (std::size_t i = 0; i < c; ++i) {
    if (!(class_accuracy[i] >= 0.0 && class_accuracy[i] <= 1.0)) {
      throw SpecError("class accuracies must lie in [0, 1]");
    }
    z[i] = 1.0 - class_accuracy[i];
  }
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  std::vector<double> fractions(c);
  for (std::size_t i = 0; i < c; ++i) {
    fractions[i] = std::exp(z[i] - m);
    s += fractions[i];
  }
  for (double& f : fractions) f /= s;
  AllocationPlan plan;
  plan.k = largest_remainder_round(fractions, total);
  plan.total = total;
  plan.fractions = std::move(fractions);
  return plan;
}

AllocationPlan uniform_allocation(std::size_t num_classes, std::int64_t total) {
  if (num_classes == 0) throw SpecError("allocation needs at least one class");
  AllocationPlan plan;
  plan.fractions.assign(num_classes, 1.0 / static_cast<double>(num_classes));
  plan.k = largest_remainder_round(plan.fractions, total);
  plan.total = total;
  return plan;
}

}  // namespace iois
