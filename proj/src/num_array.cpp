#include "iois/num_array.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "iois/error.hpp"

namespace iois {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

NumArray::NumArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

NumArray::NumArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("NumArray: shape holds " + std::to_string(element_count(shape_)) +
                         " elements but " + std::to_string(data_.size()) + " were given");
  }
}

NumArray NumArray::vector(std::initializer_list<double> values) {
  return NumArray({values.size()}, std::vector<double>(values));
}

NumArray NumArray::matrix(std::size_t rows, std::size_t cols,
                          std::initializer_list<double> values) {
  return NumArray({rows, cols}, std::vector<double>(values));
}

std::size_t NumArray::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t NumArray::cols() const {
  if (shape_.empty()) return 0;
  return shape_.back();
}

std::span<double> NumArray::row(std::size_t i) {
  return std::span<double>(data_).subspan(i * cols(), cols());
}

std::span<const double> NumArray::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * cols(), cols());
}

bool NumArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

NumArray gather_rows(const NumArray& source, std::span<const std::size_t> indices) {
  const std::size_t cols = source.cols();
  NumArray out({indices.size(), cols});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= source.rows()) throw DimensionError("gather_rows: row index out of range");
    std::copy_n(source.row(indices[r]).begin(), cols, out.row(r).begin());
  }
  return out;
}

NumArray concat_rows(const NumArray& a, const NumArray& b) {
  if (a.empty() && a.rank() != 2) return b;
  if (b.empty() && b.rank() != 2) return a;
  if (a.cols() != b.cols()) {
    throw DimensionError("concat_rows: column counts " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()) + " differ");
  }
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return NumArray({a.rows() + b.rows(), a.cols()}, std::move(data));
}

}  // namespace iois
