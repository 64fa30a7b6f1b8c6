#include "ttk/ttcore.hpp"

#include <algorithm>
#include <string>

#include "ttk/error.hpp"

namespace ttk {

RankVector::RankVector(std::initializer_list<Index> ranks)
    : RankVector(std::vector<Index>(ranks)) {}

RankVector::RankVector(std::vector<Index> ranks) : ranks_(std::move(ranks)) {
  if (ranks_.size() < 2) throw ShapeError("rank vector needs at least two entries");
  if (ranks_.front() != 1 || ranks_.back() != 1) throw ShapeError("boundary TT-ranks must be 1");
  for (Index r : ranks_) {
    if (r == 0) throw ShapeError("TT-ranks must be >= 1");
  }
}

RankVector RankVector::uniform(Index cores, Index r) {
  if (cores == 0) throw ShapeError("a train needs at least one core");
  std::vector<Index> ranks(cores + 1, r);
  ranks.front() = ranks.back() = 1;
  return RankVector(std::move(ranks));
}

RankVector RankVector::unbounded(Index cores) { return uniform(cores, kUnbounded); }

Index RankVector::max_interior() const {
  Index m = 1;
  for (Index k = 1; k + 1 < ranks_.size(); ++k) m = std::max(m, ranks_[k]);
  return m;
}

void TTVector::validate() const {
  if (cores.empty()) throw ShapeError("TT-vector has no cores");
  if (ranks.cores() != cores.size() || mode_dims.rank() != cores.size()) {
    throw ShapeError("TT-vector core count disagrees with ranks/mode dims");
  }
  for (Index k = 0; k < cores.size(); ++k) {
    if (cores[k].shape() != Shape{mode_dims[k], ranks[k], ranks[k + 1]}) {
      throw ShapeError("TT-vector core " + std::to_string(k) + " has shape " +
                       cores[k].shape().to_string());
    }
  }
}

void TTMatrix::validate() const {
  if (cores.empty()) throw ShapeError("TT-matrix has no cores");
  if (ranks.cores() != cores.size() || in_dims.rank() != cores.size() ||
      out_dims.rank() != cores.size()) {
    throw ShapeError("TT-matrix core count disagrees with ranks/dims");
  }
  for (Index k = 0; k < cores.size(); ++k) {
    if (cores[k].shape() != Shape{out_dims[k], in_dims[k], ranks[k], ranks[k + 1]}) {
      throw ShapeError("TT-matrix core " + std::to_string(k) + " has shape " +
                       cores[k].shape().to_string());
    }
  }
}

double tt_element(const TTVector& v, std::span<const Index> idx) {
  if (idx.size() != v.order()) throw IndexError("tt_element: index arity mismatch");
  std::vector<double> row{1.0};
  for (Index k = 0; k < v.order(); ++k) {
    const DenseTensor& core = v.cores[k];
    const Index i = idx[k];
    if (i >= core.dim(0)) throw IndexError("tt_element: index out of range");
    const Index r0 = core.dim(1);
    const Index r1 = core.dim(2);
    std::vector<double> next(r1, 0.0);
    const double* slice = core.data().data() + i * r0 * r1;
    for (Index a = 0; a < r0; ++a)
      for (Index b = 0; b < r1; ++b) next[b] += row[a] * slice[a * r1 + b];
    row = std::move(next);
  }
  return row[0];
}

DenseTensor tt_to_dense(const TTVector& v) {
  v.validate();
  // prefix holds (prod_{j<=k} I_j) × R_k
  std::vector<double> prefix{1.0};
  Index prefix_rows = 1;
  for (const DenseTensor& core : v.cores) {
    const Index n = core.dim(0);
    const Index r0 = core.dim(1);
    const Index r1 = core.dim(2);
    std::vector<double> next(prefix_rows * n * r1, 0.0);
    for (Index p = 0; p < prefix_rows; ++p) {
      for (Index i = 0; i < n; ++i) {
        double* out = next.data() + (p * n + i) * r1;
        const double* slice = core.data().data() + i * r0 * r1;
        for (Index a = 0; a < r0; ++a) {
          const double w = prefix[p * r0 + a];
          if (w == 0.0) continue;
          for (Index b = 0; b < r1; ++b) out[b] += w * slice[a * r1 + b];
        }
      }
    }
    prefix = std::move(next);
    prefix_rows *= n;
  }
  return DenseTensor(v.mode_dims, std::move(prefix));
}

TTVector tt_svd(const DenseTensor& t, const RankVector& max_ranks, double eps) {
  const Index order = t.rank();
  if (order == 0) throw ShapeError("tt_svd: tensor has no modes");
  if (max_ranks.cores() != order) throw ShapeError("tt_svd: rank vector length must be order + 1");
  if (!all_finite(t.data())) throw NumericError("tt_svd: non-finite input");

  const auto& dims = t.shape().dims();
  TTVector out;
  out.mode_dims = t.shape();

  if (frobenius_norm(t) == 0.0) {
    for (Index k = 0; k < order; ++k) out.cores.emplace_back(Shape{dims[k], 1, 1});
    out.ranks = RankVector::uniform(order, 1);
    return out;
  }

  std::vector<Index> ranks{1};
  std::vector<double> rest = t.storage();
  Index rest_cols = t.size();
  for (Index k = 0; k + 1 < order; ++k) {
    const Index r_prev = ranks.back();
    const Index rows = r_prev * dims[k];
    rest_cols /= dims[k];
    Matrix unfolding(rows, rest_cols, std::move(rest));
    SvdResult svd = truncated_svd(unfolding, max_ranks[k + 1], eps);
    const Index r = svd.rank;

    DenseTensor core(Shape{dims[k], r_prev, r});
    for (Index a = 0; a < r_prev; ++a)
      for (Index i = 0; i < dims[k]; ++i)
        for (Index b = 0; b < r; ++b) core.at({i, a, b}) = svd.u(a * dims[k] + i, b);
    out.cores.push_back(std::move(core));

    // remainder = diag(s) · vᵀ, reshaped to (r · I_{k+1}) × (rest_cols / I_{k+1})
    rest.assign(r * rest_cols, 0.0);
    for (Index b = 0; b < r; ++b)
      for (Index c = 0; c < rest_cols; ++c) rest[b * rest_cols + c] = svd.s[b] * svd.v(c, b);
    ranks.push_back(r);
  }

  const Index r_prev = ranks.back();
  DenseTensor last(Shape{dims[order - 1], r_prev, 1});
  for (Index a = 0; a < r_prev; ++a)
    for (Index i = 0; i < dims[order - 1]; ++i) last.at({i, a, 0}) = rest[a * dims[order - 1] + i];
  out.cores.push_back(std::move(last));
  ranks.push_back(1);
  out.ranks = RankVector(std::move(ranks));
  return out;
}

TTVector merged_modes(const TTMatrix& m) {
  m.validate();
  TTVector v;
  std::vector<Index> dims;
  for (Index k = 0; k < m.order(); ++k) {
    const Index merged = m.out_dims[k] * m.in_dims[k];
    dims.push_back(merged);
    v.cores.push_back(reshape(m.cores[k], Shape{merged, m.ranks[k], m.ranks[k + 1]}));
  }
  v.mode_dims = Shape(std::move(dims));
  v.ranks = m.ranks;
  return v;
}

double ttm_element(const TTMatrix& m, std::span<const Index> out_idx, std::span<const Index> in_idx) {
  if (out_idx.size() != m.order() || in_idx.size() != m.order()) {
    throw IndexError("ttm_element: index arity mismatch");
  }
  std::vector<Index> merged(m.order());
  for (Index k = 0; k < m.order(); ++k) {
    if (out_idx[k] >= m.out_dims[k] || in_idx[k] >= m.in_dims[k]) {
      throw IndexError("ttm_element: index out of range");
    }
    merged[k] = out_idx[k] * m.in_dims[k] + in_idx[k];
  }
  return tt_element(merged_modes(m), merged);
}

namespace {

// Calls fn(row, col, merged_flat) for every matrix entry.
template <typename Fn>
void for_each_pairing(const Shape& in_dims, const Shape& out_dims, Fn fn) {
  const Index order = in_dims.rank();
  const Index rows = out_dims.numel();
  const Index cols = in_dims.numel();
  std::vector<Index> j(order), i(order);
  for (Index row = 0; row < rows; ++row) {
    Index rem = row;
    for (Index k = order; k-- > 0;) {
      j[k] = rem % out_dims[k];
      rem /= out_dims[k];
    }
    for (Index col = 0; col < cols; ++col) {
      rem = col;
      for (Index k = order; k-- > 0;) {
        i[k] = rem % in_dims[k];
        rem /= in_dims[k];
      }
      Index flat = 0;
      for (Index k = 0; k < order; ++k) {
        flat = flat * (out_dims[k] * in_dims[k]) + (j[k] * in_dims[k] + i[k]);
      }
      fn(row, col, flat);
    }
  }
}

}  // namespace

Matrix ttm_to_dense(const TTMatrix& m) {
  const DenseTensor merged = tt_to_dense(merged_modes(m));
  Matrix w(m.rows(), m.cols());
  for_each_pairing(m.in_dims, m.out_dims,
                   [&](Index row, Index col, Index flat) { w(row, col) = merged[flat]; });
  return w;
}

TTMatrix dense_to_ttm(const Matrix& w, const Shape& in_dims, const Shape& out_dims,
                      const RankVector& max_ranks, double eps) {
  if (in_dims.rank() != out_dims.rank() || in_dims.rank() == 0) {
    throw ShapeError("dense_to_ttm: input and output factorizations need the same order");
  }
  if (w.cols() != in_dims.numel() || w.rows() != out_dims.numel()) {
    throw ShapeError("dense_to_ttm: " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                     " matrix does not factor as " + out_dims.to_string() + " x " +
                     in_dims.to_string());
  }
  const Index order = in_dims.rank();
  std::vector<Index> merged_dims(order);
  for (Index k = 0; k < order; ++k) merged_dims[k] = out_dims[k] * in_dims[k];
  DenseTensor merged{Shape(merged_dims)};
  for_each_pairing(in_dims, out_dims,
                   [&](Index row, Index col, Index flat) { merged[flat] = w(row, col); });

  TTVector v = tt_svd(merged, max_ranks, eps);
  TTMatrix out;
  out.in_dims = in_dims;
  out.out_dims = out_dims;
  out.ranks = v.ranks;
  for (Index k = 0; k < order; ++k) {
    out.cores.push_back(
        reshape(v.cores[k], Shape{out_dims[k], in_dims[k], v.ranks[k], v.ranks[k + 1]}));
  }
  return out;
}

Index tt_param_count(const Shape& in_dims, const Shape& out_dims, const RankVector& ranks) {
  if (in_dims.rank() != out_dims.rank() || ranks.cores() != in_dims.rank()) {
    throw ShapeError("tt_param_count: inconsistent dims/ranks");
  }
  Index total = 0;
  for (Index k = 0; k < in_dims.rank(); ++k) {
    total += out_dims[k] * in_dims[k] * ranks[k] * ranks[k + 1];
  }
  return total;
}

Index tt_param_count(const TTMatrix& m) { return tt_param_count(m.in_dims, m.out_dims, m.ranks); }

Index dense_param_count(Index rows, Index cols) { return rows * cols; }

}  // namespace ttk
