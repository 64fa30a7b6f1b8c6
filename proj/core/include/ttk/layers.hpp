#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ttk/tensor.hpp"
#include "ttk/ttlayer.hpp"
#include "ttk/tucker.hpp"

namespace ttk {

enum class LayerKind {
  conv1d,
  batchnorm1d,
  maxpool1d,
  globalavgpool,
  dense,
  tt_dense,
  tucker_dense,
  relu,
};

const char* to_string(LayerKind kind);

enum class Mode { train, eval };

// A named tensor owned by a layer. `grad` is null for non-trainable buffers.
struct ParamRef {
  std::string name;
  DenseTensor* value;
  DenseTensor* grad;
};

// One node of a sequential network. forward() in train mode keeps whatever
// backward() needs; eval-mode forward leaves the layer untouched.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual DenseTensor forward(const DenseTensor& x, Mode mode) = 0;
  virtual DenseTensor backward(const DenseTensor& grad_out) = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  virtual std::vector<ParamRef> parameters() { return {}; }
  virtual std::vector<ParamRef> buffers() { return {}; }
  virtual std::string describe() const { return to_string(kind()); }

  Index parameter_count();
  void zero_grad();
};

using LayerPtr = std::unique_ptr<Layer>;

// Valid cross-correlation over batch × channels × time.
class Conv1d final : public Layer {
 public:
  Conv1d(Index in_channels, Index out_channels, Index kernel, Index stride, std::uint64_t seed);

  LayerKind kind() const override { return LayerKind::conv1d; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override { return std::make_unique<Conv1d>(*this); }
  std::vector<ParamRef> parameters() override;
  std::string describe() const override;

  static Index output_length(Index time, Index kernel, Index stride);

  DenseTensor weight;  // out × in × kernel
  DenseTensor bias;    // out
  DenseTensor weight_grad;
  DenseTensor bias_grad;
  // The network input needs no gradient; skipping it halves the cost of
  // the widest convolution.
  bool propagate_input_grad = true;

 private:
  Index stride_;
  DenseTensor input_;
};

class BatchNorm1d final : public Layer {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  explicit BatchNorm1d(Index channels);

  LayerKind kind() const override { return LayerKind::batchnorm1d; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override { return std::make_unique<BatchNorm1d>(*this); }
  std::vector<ParamRef> parameters() override;
  std::vector<ParamRef> buffers() override;
  std::string describe() const override;

  DenseTensor gamma, beta;
  DenseTensor gamma_grad, beta_grad;
  DenseTensor running_mean, running_var;

 private:
  DenseTensor normalized_;
  std::vector<double> inv_std_;
};

// Non-overlapping windows (stride == kernel); the remainder is dropped and
// gradients route to the first maximum of each window.
class MaxPool1d final : public Layer {
 public:
  explicit MaxPool1d(Index kernel) : kernel_(kernel) {}

  LayerKind kind() const override { return LayerKind::maxpool1d; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override { return std::make_unique<MaxPool1d>(*this); }
  std::string describe() const override;

 private:
  Index kernel_;
  Shape input_shape_;
  std::vector<Index> argmax_;
};

class GlobalAvgPool final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::globalavgpool; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

 private:
  Shape input_shape_;
};

class ReLU final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  DenseTensor input_;
};

// y = x Wᵀ + b, W stored out × in.
class Dense final : public Layer {
 public:
  Dense(Index in_features, Index out_features, std::uint64_t seed);
  Dense(Matrix w, std::vector<double> b);

  LayerKind kind() const override { return LayerKind::dense; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override { return std::make_unique<Dense>(*this); }
  std::vector<ParamRef> parameters() override;
  std::string describe() const override;

  Matrix weight_matrix() const;
  Index in_features() const { return weight.dim(1); }
  Index out_features() const { return weight.dim(0); }

  DenseTensor weight;
  DenseTensor bias;
  DenseTensor weight_grad;
  DenseTensor bias_grad;

 private:
  DenseTensor input_;
};

class TTDense final : public Layer {
 public:
  explicit TTDense(TTLinearLayer layer);

  LayerKind kind() const override { return LayerKind::tt_dense; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override;
  std::vector<ParamRef> parameters() override;
  std::string describe() const override;

  // Current weights with the bias tensor folded back in.
  TTLinearLayer layer() const;

 private:
  TTLinearLayer layer_;
  DenseTensor bias_;  // mirrors layer_.bias so it can be exposed as a tensor
  std::vector<DenseTensor> core_grads_;
  DenseTensor bias_grad_;
  TTForwardCache cache_;
};

class TuckerDense final : public Layer {
 public:
  explicit TuckerDense(TuckerLinearLayer layer);

  LayerKind kind() const override { return LayerKind::tucker_dense; }
  DenseTensor forward(const DenseTensor& x, Mode mode) override;
  DenseTensor backward(const DenseTensor& grad_out) override;
  LayerPtr clone() const override;
  std::vector<ParamRef> parameters() override;
  std::string describe() const override;

  TuckerLinearLayer layer() const;

 private:
  TuckerLinearLayer layer_;
  std::array<DenseTensor, 4> factors_;  // tensor views of the factor matrices
  DenseTensor bias_;
  DenseTensor core_grad_;
  std::array<DenseTensor, 4> factor_grads_;
  DenseTensor bias_grad_;
  TuckerForwardCache cache_;

  void sync_from_tensors();
};

}  // namespace ttk
