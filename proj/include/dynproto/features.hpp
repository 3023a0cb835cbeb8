#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dynproto/error.hpp"

namespace dynproto {

using FeatureVector = std::vector<double>;
using LogitVector = std::vector<double>;

/// Dense row-major matrix of embeddings. One row per sample, all rows share `dim()`.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t dim) : dim_(dim) {}
  FeatureMatrix(std::size_t rows, std::size_t dim) : dim_(dim), data_(rows * dim, 0.0) {}
  FeatureMatrix(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0 || data_.size() % dim_ != 0) {
      fail(ErrorCode::DimensionMismatch, "payload is not a whole number of rows");
    }
  }

  static FeatureMatrix from_rows(const std::vector<FeatureVector>& rows) {
    if (rows.empty()) return {};
    FeatureMatrix m(rows.front().size());
    for (const auto& r : rows) m.push_back(r);
    return m;
  }

  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_ || dim_ == 0) {
      fail(ErrorCode::DimensionMismatch, "row has dimension " + std::to_string(v.size()) +
                                             ", expected " + std::to_string(dim_));
    }
    data_.insert(data_.end(), v.begin(), v.end());
  }

  void reserve(std::size_t rows) { data_.reserve(rows * dim_); }
  void clear() noexcept { data_.clear(); }

  FeatureVector row_copy(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace dynproto
