#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iois/num_array.hpp"

namespace iois {

enum class Provenance : std::uint8_t { real, synthetic };

// Feature rows with integer labels in [0, num_classes). Construction validates
// labels, row counts and provenance length.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  LabeledDataset(NumArray features, std::vector<int> labels, std::size_t num_classes,
                 std::vector<Provenance> provenance);

  static LabeledDataset empty(std::size_t dim, std::size_t num_classes);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dim() const { return features_.cols(); }
  std::size_t num_classes() const { return num_classes_; }

  const NumArray& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<Provenance>& provenance() const { return provenance_; }
  std::vector<std::size_t> class_counts() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  NumArray features_;
  std::vector<int> labels_;
  std::size_t num_classes_ = 0;
  std::vector<Provenance> provenance_;
};

// Rows of a followed by rows of b.
LabeledDataset merge(const LabeledDataset& a, const LabeledDataset& b);

// Isotropic Gaussian per class with geometric class-size decay.
struct MixtureSpec {
  std::size_t classes = 3;
  std::size_t dim = 2;
  NumArray means;                        // [classes, dim]
  std::vector<double> class_std;         // per-class standard deviation
  std::size_t n_max = 500;
  double imbalance_ratio = 10.0;
  std::vector<std::size_t> class_counts;  // explicit sizes; empty = use the decay formula

  void validate() const;
};

// Means evenly spaced on a circle of the given radius in the first two
// coordinates (on a line when dim == 1).
NumArray ring_means(std::size_t classes, std::size_t dim, double radius);

// The desk-scale default: 3 classes in 2-D with sizes [500, 150, 50].
MixtureSpec default_mixture_spec();

// n_i = round(n_max * r^(-i/(c-1))) unless explicit counts are set.
std::vector<std::size_t> class_sizes(const MixtureSpec& spec);

LabeledDataset make_imbalanced_mixture(const MixtureSpec& spec, std::uint64_t seed);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;  // ascending original indices
};

struct DatasetSplit {
  LabeledDataset train, val, test;
};

// Stratified: each class is shuffled and cut independently, val and test take
// floor(fraction * n_i) and the remainder goes to train.
SplitIndices split_indices(const LabeledDataset& ds, SplitFractions fractions, std::uint64_t seed);
DatasetSplit split_dataset(const LabeledDataset& ds, SplitFractions fractions, std::uint64_t seed);

// Text format: "n,<n>", "d,<d>", "c,<c>" header lines, then one row per
// sample: features..., label, real|synthetic.
std::string format_dataset(const LabeledDataset& ds);
LabeledDataset parse_dataset(std::string_view text, const std::string& source = "<memory>");
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

}  // namespace iois
