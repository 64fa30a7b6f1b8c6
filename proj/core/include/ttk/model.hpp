#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttk/layers.hpp"
#include "ttk/ttcore.hpp"
#include "ttk/tucker.hpp"

namespace ttk {

enum class HeadKind { dense, tt_1, tt_2, tucker };

const char* to_string(HeadKind kind);
std::optional<HeadKind> parse_head_kind(std::string_view name);

// Raw-waveform CNN front-end followed by a four-layer hidden FC stack and a
// dense classifier. The hidden stack is dense, TT-factored or
// Tucker-factored depending on head_kind.
struct ModelConfig {
  static constexpr Index kDefaultTTRank = 8;

  std::vector<Index> conv_channels{32, 32, 64, 64};
  std::vector<Index> conv_kernels{80, 3, 3, 3};
  std::vector<Index> conv_strides{16, 1, 1, 1};
  Index pool_kernel = 4;
  std::vector<Index> fc_dims{64, 128, 256, 512};
  // Factorization of the CNN feature vector and of each hidden output.
  Shape fc_input_shape{4, 4, 2, 2};
  std::vector<Shape> fc_shapes{{4, 4, 2, 2}, {4, 4, 4, 2}, {4, 4, 4, 4}, {8, 4, 4, 4}};
  Index num_classes = 35;
  HeadKind head_kind = HeadKind::dense;
  std::vector<RankVector> tt_ranks;        // one per hidden layer (TT heads)
  std::vector<TuckerRanks> tucker_ranks;   // one per hidden layer (Tucker head)
  std::uint64_t seed = 0;

  // Standard presets. `rank` is the interior TT-rank for TT heads and a
  // per-mode cap for the Tucker head; 0 selects the default (8 for TT, the
  // near-full preset for Tucker).
  static ModelConfig for_head(HeadKind kind, Index rank = 0);

  // Throws ConfigError when factored shapes and widths disagree.
  void validate() const;

  // Shortest waveform the front-end accepts.
  Index min_input_length() const;

  // Input/output factorizations of hidden layer `l` (4 modes each).
  Shape hidden_in_shape(Index l) const;
  Shape hidden_out_shape(Index l) const;
  // The same layer viewed as an order-4 Tucker tensor: (I1, I2) / (J1, J2).
  Shape tucker_in_dims(Index l) const;
  Shape tucker_out_dims(Index l) const;
};

// Near-full Tucker ranks whose whole-model count is ~0.207 M parameters.
std::vector<TuckerRanks> default_tucker_ranks(const ModelConfig& cfg);
std::vector<TuckerRanks> capped_tucker_ranks(const ModelConfig& cfg, Index cap);

class Model {
 public:
  Model() = default;
  Model(ModelConfig config, std::vector<LayerPtr> layers, Index head_begin);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  std::vector<LayerPtr>& layers() { return layers_; }
  const std::vector<LayerPtr>& layers() const { return layers_; }
  // Index of the first hidden FC layer; hidden layer l sits at head_begin + 2l.
  Index head_begin() const { return head_begin_; }

  // x: batch × 1 × time
  DenseTensor forward(const DenseTensor& x, Mode mode);
  void backward(const DenseTensor& grad_logits);

  // Trainable tensors named "<layer>.<kind>.<param>" in layer order.
  std::vector<ParamRef> parameters();
  std::vector<ParamRef> buffers();
  void zero_grad();

 private:
  ModelConfig config_;
  std::vector<LayerPtr> layers_;
  Index head_begin_ = 0;
};

Model build_model(const ModelConfig& cfg);

struct ParamRow {
  std::string layer;
  std::string description;
  Index params = 0;
};

struct ParamTable {
  std::vector<ParamRow> rows;
  Index total = 0;
};

ParamTable count_parameters(Model& model);

struct LossResult {
  double loss = 0.0;
  DenseTensor grad;  // d(mean loss)/d(logits)
};

// Mean softmax cross-entropy with max-subtraction. Throws LabelError for
// labels outside [0, classes).
LossResult softmax_cross_entropy(const DenseTensor& logits, std::span<const Index> labels);

}  // namespace ttk
