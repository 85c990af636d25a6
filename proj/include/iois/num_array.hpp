#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace iois {

// Dense row-major array of doubles. Rank 1 and rank 2 are the only shapes the
// library produces, but any shape is storable.
class NumArray {
 public:
  NumArray() = default;
  explicit NumArray(std::vector<std::size_t> shape);
  NumArray(std::vector<std::size_t> shape, std::vector<double> data);

  static NumArray vector(std::initializer_list<double> values);
  static NumArray matrix(std::size_t rows, std::size_t cols,
                         std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 view helpers. A rank-1 array is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t i);
  std::span<const double> row(std::size_t i) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  bool all_finite() const;

  friend bool operator==(const NumArray&, const NumArray&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Gathers the listed rows of a rank-2 array into a new [indices.size(), cols] array.
NumArray gather_rows(const NumArray& source, std::span<const std::size_t> indices);

// Stacks a on top of b; column counts must agree (an empty array is neutral).
NumArray concat_rows(const NumArray& a, const NumArray& b);

}  // namespace iois
