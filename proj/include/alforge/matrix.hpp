// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "alforge/error.hpp"

namespace alforge {

using Index = std::size_t;
using Label = std::uint32_t;
using LabelVector = std::vector<Label>;

// Row-major N x D matrix of 32-bit floats. Row i is the frozen embedding of
// example i.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t n, std::size_t d) : rows(n), dim(d), data(n * d, 0.0f) {}
  EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<float> values)
      : rows(n), dim(d), data(std::move(values)) {
    if (data.size() != rows * dim) throw ShapeError("embedding payload length != rows * dim");
  }

  std::span<const float> row(Index i) const { return {data.data() + i * dim, dim}; }
  std::span<float> row(Index i) { return {data.data() + i * dim, dim}; }

  bool all_finite() const {
    for (float v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

// Read-only view over a matrix, optionally restricted to a subset of rows.
// Row i of the view is row indices[i] of the underlying matrix.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(const EmbeddingMatrix& m)  // NOLINT: implicit by intent
      : data_(m.data.data()), rows_(m.rows), dim_(m.dim) {}
  MatrixView(const EmbeddingMatrix& m, std::span<const Index> indices)
      : data_(m.data.data()), rows_(indices.size()), dim_(m.dim), indices_(indices) {}
  MatrixView(const float* data, std::size_t rows, std::size_t dim)
      : data_(data), rows_(rows), dim_(dim) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<const float> row(Index i) const {
    const Index r = indices_.empty() ? i : indices_[i];
    return {data_ + r * dim_, dim_};
  }

 private:
  const float* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::span<const Index> indices_;
};

inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return s;
}

inline double squared_norm(std::span<const float> a) {
  double s = 0.0;
  for (float v : a) s += static_cast<double>(v) * v;
  return s;
}

// Copy of m with every row scaled to unit Euclidean norm (zero rows stay zero).
inline EmbeddingMatrix unit_normalized(MatrixView m) {
  EmbeddingMatrix out(m.rows(), m.dim());
  for (Index i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    const double norm = std::sqrt(squared_norm(src));
    auto dst = out.row(i);
    for (std::size_t k = 0; k < src.size(); ++k)
      dst[k] = norm > 0.0 ? static_cast<float>(src[k] / norm) : 0.0f;
  }
  return out;
}

}  // namespace alforge
