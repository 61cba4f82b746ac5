#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sme/numcore/matrix.hpp"

namespace sme {

struct SliceInfo {
  std::string name;
  std::string group;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
};

// One flat value buffer and one flat gradient buffer, carved into named
// slices. Slices are appended contiguously, so they are disjoint and cover
// both buffers exactly.
class ParamTape {
 public:
  using SliceId = std::size_t;

  SliceId add(std::string name, std::string group, std::size_t rows, std::size_t cols);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<SliceInfo>& slices() const noexcept { return slices_; }
  const SliceInfo& slice(SliceId id) const { return slices_.at(id); }
  std::optional<SliceId> find(std::string_view name) const;

  // Slice containing flat index i.
  const SliceInfo& slice_containing(std::size_t i) const;

  std::span<double> values(SliceId id);
  std::span<const double> values(SliceId id) const;
  std::span<double> grads(SliceId id);
  std::span<const double> grads(SliceId id) const;

  MatrixView value_matrix(SliceId id) const;
  MutableMatrixView mutable_value_matrix(SliceId id);
  MutableMatrixView grad_matrix(SliceId id);

  std::span<double> all_values() noexcept { return values_; }
  std::span<const double> all_values() const noexcept { return values_; }
  std::span<double> all_grads() noexcept { return grads_; }
  std::span<const double> all_grads() const noexcept { return grads_; }

  void zero_grad();

 private:
  std::vector<SliceInfo> slices_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

}  // namespace sme
