#include "ttk/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ttk/error.hpp"

namespace ttk {

namespace {

void check_dims(const std::vector<Index>& dims) {
  for (Index d : dims) {
    if (d == 0) throw ShapeError("shape dimensions must be >= 1");
  }
}

}  // namespace

Shape::Shape(std::initializer_list<Index> dims) : dims_(dims) { check_dims(dims_); }

Shape::Shape(std::vector<Index> dims) : dims_(std::move(dims)) { check_dims(dims_); }

Index Shape::numel() const { return product(dims_); }

std::string Shape::to_string() const {
  std::ostringstream os;
  os << '(';
  for (Index k = 0; k < dims_.size(); ++k) {
    if (k) os << 'x';
    os << dims_[k];
  }
  os << ')';
  return os.str();
}

Index product(std::span<const Index> dims) {
  Index p = 1;
  for (Index d : dims) p *= d;
  return p;
}

Index linear_index(const Shape& shape, std::span<const Index> idx) {
  if (idx.size() != shape.rank()) {
    throw IndexError("index arity " + std::to_string(idx.size()) + " does not match shape " +
                     shape.to_string());
  }
  Index flat = 0;
  for (Index k = 0; k < idx.size(); ++k) {
    if (idx[k] >= shape[k]) {
      throw IndexError("index component " + std::to_string(k) + " = " + std::to_string(idx[k]) +
                       " out of range for shape " + shape.to_string());
    }
    flat = flat * shape[k] + idx[k];
  }
  return flat;
}

std::vector<Index> multi_index(const Shape& shape, Index flat) {
  if (flat >= shape.numel()) throw IndexError("flat index out of range");
  std::vector<Index> idx(shape.rank());
  for (Index k = shape.rank(); k-- > 0;) {
    idx[k] = flat % shape[k];
    flat /= shape[k];
  }
  return idx;
}

DenseTensor::DenseTensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_.to_string());
  }
}

void DenseTensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix::Matrix(Index rows, Index cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(Index rows, Index cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw ShapeError("matrix data length does not match rows*cols");
}

Matrix Matrix::identity(Index n) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseTensor reshape(const DenseTensor& t, Shape new_shape) {
  if (new_shape.numel() != t.size()) {
    throw ShapeError("cannot reshape " + t.shape().to_string() + " to " + new_shape.to_string());
  }
  return DenseTensor(std::move(new_shape), t.storage());
}

Matrix unfold(const DenseTensor& t, Index k) {
  if (k < 1 || k >= t.rank()) {
    throw ShapeError("unfold split " + std::to_string(k) + " out of range for shape " +
                     t.shape().to_string());
  }
  const auto& dims = t.shape().dims();
  Index rows = product(std::span(dims).first(k));
  Index cols = product(std::span(dims).subspan(k));
  // Row-major storage makes the grouped layout identical to the flat layout.
  return Matrix(rows, cols, t.storage());
}

DenseTensor fold(const Matrix& m, Shape shape, Index k) {
  if (k < 1 || k >= shape.rank()) throw ShapeError("fold split out of range");
  const auto& dims = shape.dims();
  if (product(std::span(dims).first(k)) != m.rows() ||
      product(std::span(dims).subspan(k)) != m.cols()) {
    throw ShapeError("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     " incompatible with " + shape.to_string());
  }
  return DenseTensor(std::move(shape), std::vector<double>(m.data().begin(), m.data().end()));
}

DenseTensor as_tensor(const Matrix& m) {
  return DenseTensor(Shape{m.rows(), m.cols()},
                     std::vector<double>(m.data().begin(), m.data().end()));
}

Matrix as_matrix(const DenseTensor& t, Index rows, Index cols) {
  if (rows * cols != t.size()) throw ShapeError("as_matrix: element count mismatch");
  return Matrix(rows, cols, t.storage());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    auto crow = c.row(i);
    for (Index k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (Index j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (Index k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (Index i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto crow = c.row(i);
      for (Index j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  Matrix c(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (Index j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double acc = 0.0;
      for (Index k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

namespace {

template <typename Op>
std::vector<double> zip(std::span<const double> a, std::span<const double> b, Op op) {
  std::vector<double> out(a.size());
  for (Index i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

}  // namespace

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("add: shapes differ");
  return Matrix(a.rows(), a.cols(), zip(a.data(), b.data(), std::plus<>()));
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("subtract: shapes differ");
  return Matrix(a.rows(), a.cols(), zip(a.data(), b.data(), std::minus<>()));
}

Matrix scale(const Matrix& m, double alpha) {
  Matrix out = m;
  for (double& x : out.data()) x *= alpha;
  return out;
}

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("add: shapes differ");
  return DenseTensor(a.shape(), zip(a.data(), b.data(), std::plus<>()));
}

DenseTensor subtract(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("subtract: shapes differ");
  return DenseTensor(a.shape(), zip(a.data(), b.data(), std::minus<>()));
}

DenseTensor scale(const DenseTensor& t, double alpha) {
  DenseTensor out = t;
  for (double& x : out.data()) x *= alpha;
  return out;
}

double frobenius_norm(std::span<const double> values) {
  // Scaled accumulation avoids overflow for large entries.
  double scale_ = 0.0;
  double ssq = 1.0;
  for (double x : values) {
    if (x == 0.0) continue;
    const double ax = std::abs(x);
    if (scale_ < ax) {
      ssq = 1.0 + ssq * (scale_ / ax) * (scale_ / ax);
      scale_ = ax;
    } else {
      ssq += (ax / scale_) * (ax / scale_);
    }
  }
  return scale_ * std::sqrt(ssq);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff: length mismatch");
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace ttk
