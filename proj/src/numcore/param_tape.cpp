#include "sme/numcore/param_tape.hpp"

#include <algorithm>

#include "sme/error.hpp"

namespace sme {

ParamTape::SliceId ParamTape::add(std::string name, std::string group, std::size_t rows,
                                  std::size_t cols) {
  if (find(name)) throw ConfigError("duplicate parameter slice '" + name + "'");
  const std::size_t offset = values_.size();
  slices_.push_back({std::move(name), std::move(group), offset, rows, cols});
  values_.resize(offset + rows * cols, 0.0);
  grads_.resize(offset + rows * cols, 0.0);
  return slices_.size() - 1;
}

std::optional<ParamTape::SliceId> ParamTape::find(std::string_view name) const {
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    if (slices_[i].name == name) return i;
  }
  return std::nullopt;
}

const SliceInfo& ParamTape::slice_containing(std::size_t i) const {
  auto it = std::upper_bound(slices_.begin(), slices_.end(), i,
                             [](std::size_t idx, const SliceInfo& s) { return idx < s.offset; });
  // Zero-sized slices share an offset with their successor; step back to one that holds i.
  while (it != slices_.begin()) {
    --it;
    if (i < it->offset + it->size()) return *it;
  }
  throw LookupError("flat index " + std::to_string(i) + " is outside the tape");
}

std::span<double> ParamTape::values(SliceId id) {
  const auto& s = slices_.at(id);
  return {values_.data() + s.offset, s.size()};
}

std::span<const double> ParamTape::values(SliceId id) const {
  const auto& s = slices_.at(id);
  return {values_.data() + s.offset, s.size()};
}

std::span<double> ParamTape::grads(SliceId id) {
  const auto& s = slices_.at(id);
  return {grads_.data() + s.offset, s.size()};
}

std::span<const double> ParamTape::grads(SliceId id) const {
  const auto& s = slices_.at(id);
  return {grads_.data() + s.offset, s.size()};
}

MatrixView ParamTape::value_matrix(SliceId id) const {
  const auto& s = slices_.at(id);
  return {values(id), s.rows, s.cols};
}

MutableMatrixView ParamTape::mutable_value_matrix(SliceId id) {
  const auto& s = slices_.at(id);
  return {values(id), s.rows, s.cols};
}

MutableMatrixView ParamTape::grad_matrix(SliceId id) {
  const auto& s = slices_.at(id);
  return {grads(id), s.rows, s.cols};
}

void ParamTape::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

}  // namespace sme
