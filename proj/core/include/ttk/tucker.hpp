#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ttk/tensor.hpp"

namespace ttk {

using TuckerRanks = std::array<Index, 4>;

// A prod(J) × prod(I) weight viewed as the order-4 tensor (J1, J2, I1, I2)
// (same row-major linearization as ttm_to_dense with two paired modes),
// stored as core ×1 U1 ×2 U2 ×3 U3 ×4 U4.
struct TuckerMatrix {
  DenseTensor core;               // (r1, r2, r3, r4)
  std::array<Matrix, 4> factors;  // factor k: mode_dim_k × r_k
  Shape in_dims;                  // (I1, I2)
  Shape out_dims;                 // (J1, J2)

  Shape mode_dims() const { return Shape{out_dims[0], out_dims[1], in_dims[0], in_dims[1]}; }
  TuckerRanks ranks() const;
  Index rows() const { return out_dims.numel(); }
  Index cols() const { return in_dims.numel(); }
  void validate() const;
};

// Mode-k product: result(.., a, ..) = sum_b m(a, b) * t(.., b, ..).
DenseTensor mode_product(const DenseTensor& t, const Matrix& m, Index mode);
// d_mode × (product of the other dims), remaining modes in their original order.
Matrix mode_unfold(const DenseTensor& t, Index mode);

// One-pass HOSVD: factor k holds the leading r_k left singular vectors of
// the mode-k unfolding; the core is the projection onto those bases.
TuckerMatrix hosvd(const Matrix& w, const Shape& in_dims, const Shape& out_dims,
                   const TuckerRanks& mode_ranks);

Matrix tucker_reconstruct(const TuckerMatrix& t);

// prod r_k + sum_k mode_dim_k * r_k
Index tucker_param_count(const TuckerMatrix& t);
Index tucker_param_count(const Shape& mode_dims, const TuckerRanks& ranks);

// Random Tucker weight: orthonormal factors (QR of Gaussian) and a Gaussian
// core scaled so reconstructed entries have variance about 1/prod(I).
TuckerMatrix tucker_random(const Shape& in_dims, const Shape& out_dims, const TuckerRanks& ranks,
                           std::uint64_t seed);

struct TuckerLinearLayer {
  TuckerMatrix weights;
  std::vector<double> bias;

  Index in_features() const { return weights.cols(); }
  Index out_features() const { return weights.rows(); }
};

struct TuckerForwardCache {
  DenseTensor input;
  Matrix weight;  // materialized reconstruction
  bool empty() const { return input.size() == 0; }
};

struct TuckerGradients {
  DenseTensor core;
  std::array<Matrix, 4> factors;
  std::vector<double> bias;
  DenseTensor input;
};

DenseTensor tucker_layer_forward(const TuckerLinearLayer& layer, const DenseTensor& x,
                                 TuckerForwardCache* cache = nullptr);
TuckerGradients tucker_layer_backward(const TuckerLinearLayer& layer,
                                      const TuckerForwardCache& cache,
                                      const DenseTensor& grad_out);

}  // namespace ttk
