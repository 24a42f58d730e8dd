// Dense row-major matrices and a CSR sparse matrix. Deliberately minimal:
// the model needs predictable memory layout and bit-reproducible arithmetic,
// so all heavy operations live in kernels.hpp where the loop order is fixed.
#pragma once

#include <cstddef>
#include <vector>

#include "lifegraph/common.hpp"

namespace lifegraph {

template <typename T>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const T* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Mat<double>;
using IntMatrix = Mat<int>;

// Compressed sparse row. Column indices within a row are strictly ascending,
// which makes sparse products accumulate in the same order as a dense loop
// over columns — the two paths agree bit-for-bit.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;   // size rows+1
  std::vector<int> col_idx;   // size nnz
  std::vector<double> values; // size nnz

  static SparseMatrix from_dense(const Matrix& dense) {
    SparseMatrix s;
    s.rows = dense.rows();
    s.cols = dense.cols();
    s.row_ptr.assign(s.rows + 1, 0);
    for (int i = 0; i < s.rows; ++i) {
      for (int j = 0; j < s.cols; ++j) {
        if (dense(i, j) != 0.0) {
          s.col_idx.push_back(j);
          s.values.push_back(dense(i, j));
        }
      }
      s.row_ptr[i + 1] = static_cast<int>(s.col_idx.size());
    }
    return s;
  }

  int nnz() const { return static_cast<int>(values.size()); }
};

inline void require_shape(const Matrix& m, int rows, int cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

}  // namespace lifegraph
