#include "ttk/tucker.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ttk/error.hpp"

namespace ttk {

namespace {

struct ModeSplit {
  Index outer;
  Index dim;
  Index inner;
};

ModeSplit split_at(const Shape& shape, Index mode) {
  if (mode >= shape.rank()) throw ShapeError("mode index out of range");
  ModeSplit s{1, shape[mode], 1};
  for (Index k = 0; k < mode; ++k) s.outer *= shape[k];
  for (Index k = mode + 1; k < shape.rank(); ++k) s.inner *= shape[k];
  return s;
}

// Leading `r` left singular vectors, padded with an orthonormal complement
// when the matrix has lower numerical rank than requested.
Matrix leading_basis(const Matrix& m, Index r) {
  SvdResult svd = truncated_svd(m, r, 0.0);
  const Index n = m.rows();
  std::vector<std::vector<double>> cols;
  for (Index j = 0; j < svd.rank; ++j) {
    std::vector<double> c(n);
    for (Index i = 0; i < n; ++i) c[i] = svd.u(i, j);
    cols.push_back(std::move(c));
  }
  for (Index e = 0; e < n && cols.size() < r; ++e) {
    std::vector<double> c(n, 0.0);
    c[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : cols) {
        double dot = 0.0;
        for (Index i = 0; i < n; ++i) dot += q[i] * c[i];
        for (Index i = 0; i < n; ++i) c[i] -= dot * q[i];
      }
    }
    const double norm = frobenius_norm(c);
    if (norm < 1e-8) continue;
    for (double& x : c) x /= norm;
    cols.push_back(std::move(c));
  }
  Matrix out(n, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < n; ++i) out(i, j) = cols[j][i];
  return out;
}

void check_factorization(const Matrix& w, const Shape& in_dims, const Shape& out_dims) {
  if (in_dims.rank() != 2 || out_dims.rank() != 2) {
    throw ShapeError("Tucker weights need two input and two output factors");
  }
  if (w.cols() != in_dims.numel() || w.rows() != out_dims.numel()) {
    throw ShapeError("hosvd: " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                     " matrix does not factor as " + out_dims.to_string() + " x " +
                     in_dims.to_string());
  }
}

Matrix dense_linear(const DenseTensor& x, const Matrix& w, std::span<const double> bias) {
  Matrix y = matmul_nt(as_matrix(x, x.dim(0), x.dim(1)), w);
  for (Index b = 0; b < y.rows(); ++b)
    for (Index o = 0; o < y.cols(); ++o) y(b, o) += bias[o];
  return y;
}

}  // namespace

TuckerRanks TuckerMatrix::ranks() const {
  return {core.dim(0), core.dim(1), core.dim(2), core.dim(3)};
}

void TuckerMatrix::validate() const {
  if (in_dims.rank() != 2 || out_dims.rank() != 2 || core.rank() != 4) {
    throw ShapeError("Tucker matrix must have a 4-mode core and two-factor dims");
  }
  const Shape dims = mode_dims();
  for (Index k = 0; k < 4; ++k) {
    if (factors[k].rows() != dims[k] || factors[k].cols() != core.dim(k)) {
      throw ShapeError("Tucker factor " + std::to_string(k) + " has wrong shape");
    }
  }
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& m, Index mode) {
  const ModeSplit s = split_at(t.shape(), mode);
  if (m.cols() != s.dim) throw ShapeError("mode_product: matrix columns != mode dimension");
  std::vector<Index> dims = t.shape().dims();
  dims[mode] = m.rows();
  DenseTensor out{Shape(dims)};
  const double* src = t.data().data();
  double* dst = out.data().data();
  for (Index o = 0; o < s.outer; ++o) {
    for (Index a = 0; a < m.rows(); ++a) {
      double* drow = dst + (o * m.rows() + a) * s.inner;
      for (Index b = 0; b < s.dim; ++b) {
        const double mv = m(a, b);
        if (mv == 0.0) continue;
        const double* srow = src + (o * s.dim + b) * s.inner;
        for (Index i = 0; i < s.inner; ++i) drow[i] += mv * srow[i];
      }
    }
  }
  return out;
}

Matrix mode_unfold(const DenseTensor& t, Index mode) {
  const ModeSplit s = split_at(t.shape(), mode);
  Matrix out(s.dim, s.outer * s.inner);
  const double* src = t.data().data();
  for (Index o = 0; o < s.outer; ++o)
    for (Index d = 0; d < s.dim; ++d)
      for (Index i = 0; i < s.inner; ++i) out(d, o * s.inner + i) = src[(o * s.dim + d) * s.inner + i];
  return out;
}

TuckerMatrix hosvd(const Matrix& w, const Shape& in_dims, const Shape& out_dims,
                   const TuckerRanks& mode_ranks) {
  check_factorization(w, in_dims, out_dims);
  TuckerMatrix out;
  out.in_dims = in_dims;
  out.out_dims = out_dims;
  const Shape dims = out.mode_dims();
  for (Index k = 0; k < 4; ++k) {
    if (mode_ranks[k] < 1 || mode_ranks[k] > dims[k]) {
      throw ShapeError("hosvd: mode rank " + std::to_string(k) + " must lie in [1, " +
                       std::to_string(dims[k]) + "]");
    }
  }
  const DenseTensor t(dims, std::vector<double>(w.data().begin(), w.data().end()));
  DenseTensor core = t;
  for (Index k = 0; k < 4; ++k) {
    out.factors[k] = leading_basis(mode_unfold(t, k), mode_ranks[k]);
    core = mode_product(core, transpose(out.factors[k]), k);
  }
  out.core = std::move(core);
  return out;
}

Matrix tucker_reconstruct(const TuckerMatrix& t) {
  t.validate();
  DenseTensor full = t.core;
  for (Index k = 0; k < 4; ++k) full = mode_product(full, t.factors[k], k);
  return Matrix(t.rows(), t.cols(), std::move(full.storage()));
}

Index tucker_param_count(const Shape& mode_dims, const TuckerRanks& ranks) {
  Index core = 1;
  Index factors = 0;
  for (Index k = 0; k < 4; ++k) {
    core *= ranks[k];
    factors += mode_dims[k] * ranks[k];
  }
  return core + factors;
}

Index tucker_param_count(const TuckerMatrix& t) { return tucker_param_count(t.mode_dims(), t.ranks()); }

TuckerMatrix tucker_random(const Shape& in_dims, const Shape& out_dims, const TuckerRanks& ranks,
                           std::uint64_t seed) {
  TuckerMatrix out;
  out.in_dims = in_dims;
  out.out_dims = out_dims;
  const Shape dims = out.mode_dims();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double coverage = 1.0;
  for (Index k = 0; k < 4; ++k) {
    if (ranks[k] < 1 || ranks[k] > dims[k]) throw ShapeError("tucker_random: mode rank out of range");
    Matrix g(dims[k], ranks[k]);
    for (double& v : g.data()) v = normal(rng);
    out.factors[k] = thin_qr(g).q;
    coverage *= static_cast<double>(ranks[k]) / static_cast<double>(dims[k]);
  }
  const double sigma = 1.0 / std::sqrt(static_cast<double>(in_dims.numel()) * coverage);
  out.core = DenseTensor(Shape{ranks[0], ranks[1], ranks[2], ranks[3]});
  for (double& v : out.core.data()) v = sigma * normal(rng);
  return out;
}

DenseTensor tucker_layer_forward(const TuckerLinearLayer& layer, const DenseTensor& x,
                                 TuckerForwardCache* cache) {
  if (x.rank() != 2 || x.dim(1) != layer.in_features()) {
    throw ShapeError("tucker_layer_forward: input shape " + x.shape().to_string());
  }
  if (layer.bias.size() != layer.out_features()) throw ShapeError("Tucker layer bias length mismatch");
  Matrix w = tucker_reconstruct(layer.weights);
  Matrix y = dense_linear(x, w, layer.bias);
  if (cache) {
    cache->input = x;
    cache->weight = std::move(w);
  }
  return as_tensor(y);
}

TuckerGradients tucker_layer_backward(const TuckerLinearLayer& layer,
                                      const TuckerForwardCache& cache,
                                      const DenseTensor& grad_out) {
  if (cache.empty()) throw StateError("tucker_layer_backward called without a forward cache");
  const Index batch = cache.input.dim(0);
  if (grad_out.rank() != 2 || grad_out.dim(0) != batch || grad_out.dim(1) != layer.out_features()) {
    throw ShapeError("tucker_layer_backward: grad_out shape " + grad_out.shape().to_string());
  }
  const TuckerMatrix& t = layer.weights;
  const Matrix dy = as_matrix(grad_out, batch, layer.out_features());
  const Matrix x = as_matrix(cache.input, batch, layer.in_features());

  TuckerGradients g;
  g.bias.assign(layer.out_features(), 0.0);
  for (Index b = 0; b < batch; ++b)
    for (Index o = 0; o < dy.cols(); ++o) g.bias[o] += dy(b, o);
  g.input = as_tensor(matmul(dy, cache.weight));

  const Matrix dw = matmul_tn(dy, x);
  const DenseTensor dw4(t.mode_dims(), std::vector<double>(dw.data().begin(), dw.data().end()));

  DenseTensor dcore = dw4;
  for (Index k = 0; k < 4; ++k) dcore = mode_product(dcore, transpose(t.factors[k]), k);
  g.core = std::move(dcore);

  for (Index k = 0; k < 4; ++k) {
    DenseTensor partial = t.core;
    for (Index q = 0; q < 4; ++q) {
      if (q != k) partial = mode_product(partial, t.factors[q], q);
    }
    g.factors[k] = matmul_nt(mode_unfold(dw4, k), mode_unfold(partial, k));
  }
  return g;
}

}  // namespace ttk
