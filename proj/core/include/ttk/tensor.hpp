#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ttk {

using Index = std::size_t;

// Ordered list of positive extents. Indices are 0-based; the last index
// varies fastest in every linearization used by the library.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<Index> dims);
  explicit Shape(std::vector<Index> dims);

  Index rank() const { return dims_.size(); }
  Index operator[](Index k) const { return dims_[k]; }
  Index numel() const;
  const std::vector<Index>& dims() const { return dims_; }

  std::string to_string() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<Index> dims_;
};

Index product(std::span<const Index> dims);

// Row-major flat offset of a multi-index. Throws IndexError on arity
// mismatch or an out-of-range component.
Index linear_index(const Shape& shape, std::span<const Index> idx);
std::vector<Index> multi_index(const Shape& shape, Index flat);

class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape, double fill = 0.0);
  DenseTensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  Index rank() const { return shape_.rank(); }
  Index dim(Index k) const { return shape_[k]; }
  Index size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](Index flat) { return data_[flat]; }
  double operator[](Index flat) const { return data_[flat]; }

  double& at(std::span<const Index> idx) { return data_[linear_index(shape_, idx)]; }
  double at(std::span<const Index> idx) const { return data_[linear_index(shape_, idx)]; }
  double& at(std::initializer_list<Index> idx) { return at(std::span<const Index>(idx.begin(), idx.size())); }
  double at(std::initializer_list<Index> idx) const { return at(std::span<const Index>(idx.begin(), idx.size())); }

  void fill(double value);

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(Index rows, Index cols, double fill = 0.0);
  Matrix(Index rows, Index cols, std::vector<double> data);

  static Matrix identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return data_.size(); }

  double& operator()(Index r, Index c) { return data_[r * cols_ + c]; }
  double operator()(Index r, Index c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(Index r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(Index r) const { return {data_.data() + r * cols_, cols_}; }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

// Metadata-only change; element order is untouched.
DenseTensor reshape(const DenseTensor& t, Shape new_shape);

// Groups modes [0, k) into rows and [k, K) into columns.
Matrix unfold(const DenseTensor& t, Index k);
DenseTensor fold(const Matrix& m, Shape shape, Index k);

DenseTensor as_tensor(const Matrix& m);
Matrix as_matrix(const DenseTensor& t, Index rows, Index cols);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ·b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a·bᵀ
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double alpha);
DenseTensor add(const DenseTensor& a, const DenseTensor& b);
DenseTensor subtract(const DenseTensor& a, const DenseTensor& b);
DenseTensor scale(const DenseTensor& t, double alpha);

double frobenius_norm(std::span<const double> values);
inline double frobenius_norm(const Matrix& m) { return frobenius_norm(m.data()); }
inline double frobenius_norm(const DenseTensor& t) { return frobenius_norm(t.data()); }
double max_abs_diff(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> values);

struct SvdResult {
  Matrix u;               // rows × r, orthonormal columns
  std::vector<double> s;  // r values, non-increasing
  Matrix v;               // cols × r, orthonormal columns
  Index rank = 0;
};

// Thin SVD truncated to r = min(max_rank, numerical rank). The numerical
// rank is the smallest r whose discarded tail satisfies
// sqrt(sum_{i>r} s_i^2) <= eps * ||m||_F, after first discarding singular
// values at round-off level (<= max(rows, cols) * DBL_EPSILON * s_max).
// Always returns r >= 1.
SvdResult truncated_svd(const Matrix& m, Index max_rank, double eps);

struct QrResult {
  Matrix q;  // rows × min(rows, cols), orthonormal columns
  Matrix r;  // min(rows, cols) × cols, upper triangular
};

QrResult thin_qr(const Matrix& m);

}  // namespace ttk
