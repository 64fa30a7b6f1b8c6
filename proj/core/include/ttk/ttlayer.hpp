#pragma once

#include <cstdint>
#include <vector>

#include "ttk/tensor.hpp"
#include "ttk/ttcore.hpp"

namespace ttk {

enum class Activation { identity, relu };

// Fully-connected layer whose weight is held as a TT-matrix:
// y = act(W x + b) with W = ttm_to_dense(weights).
struct TTLinearLayer {
  TTMatrix weights;
  std::vector<double> bias;  // length prod(out_dims)
  Activation activation = Activation::identity;

  const Shape& in_dims() const { return weights.in_dims; }
  const Shape& out_dims() const { return weights.out_dims; }
  Index in_features() const { return weights.cols(); }
  Index out_features() const { return weights.rows(); }
  void validate() const;
};

// Intermediate contraction states kept by tt_forward for tt_backward.
struct TTForwardCache {
  std::vector<std::vector<double>> states;  // input to contraction step k
  std::vector<double> pre_activation;       // W x + b
  Index batch = 0;

  bool empty() const { return states.empty(); }
  void clear();
};

struct TTGradients {
  std::vector<DenseTensor> cores;  // same shapes as weights.cores
  std::vector<double> bias;
  DenseTensor input;  // batch × prod(in_dims)
};

// x: batch × prod(in_dims). The input is reshaped to (I_1, ..., I_K) per
// sample and contracted core by core; the dense weight is never formed.
DenseTensor tt_forward(const TTLinearLayer& layer, const DenseTensor& x,
                       TTForwardCache* cache = nullptr);

// Throws StateError when the cache is empty.
TTGradients tt_backward(const TTLinearLayer& layer, const TTForwardCache& cache,
                        const DenseTensor& grad_out);

// Gaussian cores with sigma = (prod I)^(-1/2K) * (prod R)^(-1/2K), zero bias.
TTLinearLayer tt_layer_random(const Shape& in_dims, const Shape& out_dims, const RankVector& ranks,
                              std::uint64_t seed, Activation activation = Activation::identity);

TTLinearLayer tt_layer_from_dense(const Matrix& w, std::span<const double> bias,
                                  const Shape& in_dims, const Shape& out_dims,
                                  const RankVector& max_ranks,
                                  Activation activation = Activation::identity);

// tt_param_count(weights) + bias length
Index tt_layer_param_count(const TTLinearLayer& layer);

}  // namespace ttk
