#include "ttk/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ttk/error.hpp"

namespace ttk {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Shape pair_merge(const Shape& s) {
  if (s.rank() != 4) throw ConfigError("Tucker view needs a 4-mode factorization, got " + s.to_string());
  return Shape{s[0] * s[1], s[2] * s[3]};
}

std::string layer_prefix(Index i, const Layer& layer) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return std::string(buf) + "." + to_string(layer.kind()) + ".";
}

}  // namespace

const char* to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::dense: return "dense";
    case HeadKind::tt_1: return "tt_1";
    case HeadKind::tt_2: return "tt_2";
    case HeadKind::tucker: return "tucker";
  }
  return "unknown";
}

std::optional<HeadKind> parse_head_kind(std::string_view name) {
  for (HeadKind k : {HeadKind::dense, HeadKind::tt_1, HeadKind::tt_2, HeadKind::tucker}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

ModelConfig ModelConfig::for_head(HeadKind kind, Index rank) {
  ModelConfig cfg;
  cfg.head_kind = kind;
  if (kind == HeadKind::tt_2) {
    cfg.fc_dims.back() = 1024;
    cfg.fc_shapes.back() = Shape{8, 4, 8, 4};
  }
  if (kind == HeadKind::tt_1 || kind == HeadKind::tt_2) {
    const Index r = rank == 0 ? kDefaultTTRank : rank;
    cfg.tt_ranks.assign(cfg.fc_dims.size(), RankVector::uniform(4, r));
  }
  if (kind == HeadKind::tucker) {
    cfg.tucker_ranks = rank == 0 ? default_tucker_ranks(cfg) : capped_tucker_ranks(cfg, rank);
  }
  return cfg;
}

Shape ModelConfig::hidden_in_shape(Index l) const { return l == 0 ? fc_input_shape : fc_shapes.at(l - 1); }
Shape ModelConfig::hidden_out_shape(Index l) const { return fc_shapes.at(l); }
Shape ModelConfig::tucker_in_dims(Index l) const { return pair_merge(hidden_in_shape(l)); }
Shape ModelConfig::tucker_out_dims(Index l) const { return pair_merge(hidden_out_shape(l)); }

void ModelConfig::validate() const {
  const Index blocks = conv_channels.size();
  if (blocks == 0 || conv_kernels.size() != blocks || conv_strides.size() != blocks) {
    throw ConfigError("conv_channels, conv_kernels and conv_strides must have equal, non-zero length");
  }
  for (Index k : conv_kernels) {
    if (k == 0) throw ConfigError("conv kernels must be >= 1");
  }
  for (Index s : conv_strides) {
    if (s == 0) throw ConfigError("conv strides must be >= 1");
  }
  if (pool_kernel == 0) throw ConfigError("pool kernel must be >= 1");
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (fc_dims.empty()) throw ConfigError("fc_dims must not be empty");
  if (head_kind == HeadKind::dense) return;

  if (fc_shapes.size() != fc_dims.size()) throw ConfigError("one factored shape per FC layer required");
  if (fc_input_shape.numel() != conv_channels.back()) {
    throw ConfigError("fc_input_shape " + fc_input_shape.to_string() + " does not factor " +
                      std::to_string(conv_channels.back()) + " CNN features");
  }
  for (Index l = 0; l < fc_dims.size(); ++l) {
    if (fc_shapes[l].numel() != fc_dims[l]) {
      throw ConfigError("factored shape " + fc_shapes[l].to_string() + " does not match width " +
                        std::to_string(fc_dims[l]));
    }
    if (fc_shapes[l].rank() != fc_input_shape.rank()) {
      throw ConfigError("all factored shapes need the same number of modes");
    }
  }
  if (head_kind == HeadKind::tt_1 || head_kind == HeadKind::tt_2) {
    if (tt_ranks.size() != fc_dims.size()) throw ConfigError("one TT rank vector per hidden layer required");
    for (const RankVector& r : tt_ranks) {
      if (r.cores() != fc_input_shape.rank()) throw ConfigError("TT rank vector length mismatch");
    }
  }
  if (head_kind == HeadKind::tucker) {
    if (tucker_ranks.size() != fc_dims.size()) throw ConfigError("one Tucker rank set per hidden layer required");
    for (Index l = 0; l < fc_dims.size(); ++l) {
      const Shape in = tucker_in_dims(l), out = tucker_out_dims(l);
      const Shape modes{out[0], out[1], in[0], in[1]};
      for (Index k = 0; k < 4; ++k) {
        if (tucker_ranks[l][k] < 1 || tucker_ranks[l][k] > modes[k]) {
          throw ConfigError("Tucker rank out of range for layer " + std::to_string(l));
        }
      }
    }
  }
}

Index ModelConfig::min_input_length() const {
  Index length = 1;
  for (Index b = conv_channels.size(); b-- > 0;) {
    length *= pool_kernel;
    length = (length - 1) * conv_strides[b] + conv_kernels[b];
  }
  return length;
}

std::vector<TuckerRanks> default_tucker_ranks(const ModelConfig& cfg) {
  std::vector<TuckerRanks> ranks;
  for (Index l = 0; l < cfg.fc_dims.size(); ++l) {
    const Shape in = cfg.tucker_in_dims(l), out = cfg.tucker_out_dims(l);
    ranks.push_back({out[0], out[1], in[0], in[1]});
  }
  // Mild truncation of the widest layer's last input mode.
  TuckerRanks& top = ranks.back();
  top[3] = std::max<Index>(1, top[3] >= 2 ? top[3] - 2 : 1);
  return ranks;
}

std::vector<TuckerRanks> capped_tucker_ranks(const ModelConfig& cfg, Index cap) {
  std::vector<TuckerRanks> ranks;
  for (Index l = 0; l < cfg.fc_dims.size(); ++l) {
    const Shape in = cfg.tucker_in_dims(l), out = cfg.tucker_out_dims(l);
    ranks.push_back({std::min(out[0], cap), std::min(out[1], cap), std::min(in[0], cap),
                     std::min(in[1], cap)});
  }
  return ranks;
}

Model::Model(ModelConfig config, std::vector<LayerPtr> layers, Index head_begin)
    : config_(std::move(config)), layers_(std::move(layers)), head_begin_(head_begin) {}

Model::Model(const Model& other) : config_(other.config_), head_begin_(other.head_begin_) {
  for (const LayerPtr& l : other.layers_) layers_.push_back(l->clone());
}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

DenseTensor Model::forward(const DenseTensor& x, Mode mode) {
  DenseTensor h = x;
  for (LayerPtr& layer : layers_) h = layer->forward(h, mode);
  return h;
}

void Model::backward(const DenseTensor& grad_logits) {
  DenseTensor g = grad_logits;
  for (Index i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> out;
  for (Index i = 0; i < layers_.size(); ++i) {
    for (ParamRef p : layers_[i]->parameters()) {
      p.name = layer_prefix(i, *layers_[i]) + p.name;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<ParamRef> Model::buffers() {
  std::vector<ParamRef> out;
  for (Index i = 0; i < layers_.size(); ++i) {
    for (ParamRef p : layers_[i]->buffers()) {
      p.name = layer_prefix(i, *layers_[i]) + p.name;
      out.push_back(std::move(p));
    }
  }
  return out;
}

void Model::zero_grad() {
  for (LayerPtr& l : layers_) l->zero_grad();
}

Model build_model(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<LayerPtr> layers;
  std::uint64_t stream = 0;
  Index channels = 1;
  for (Index b = 0; b < cfg.conv_channels.size(); ++b) {
    layers.push_back(std::make_unique<Conv1d>(channels, cfg.conv_channels[b], cfg.conv_kernels[b],
                                              cfg.conv_strides[b], mix_seed(cfg.seed, stream++)));
    layers.push_back(std::make_unique<BatchNorm1d>(cfg.conv_channels[b]));
    layers.push_back(std::make_unique<ReLU>());
    layers.push_back(std::make_unique<MaxPool1d>(cfg.pool_kernel));
    channels = cfg.conv_channels[b];
  }
  layers.push_back(std::make_unique<GlobalAvgPool>());
  const Index head_begin = layers.size();

  Index width = channels;
  for (Index l = 0; l < cfg.fc_dims.size(); ++l) {
    const std::uint64_t seed = mix_seed(cfg.seed, stream++);
    switch (cfg.head_kind) {
      case HeadKind::dense:
        layers.push_back(std::make_unique<Dense>(width, cfg.fc_dims[l], seed));
        break;
      case HeadKind::tt_1:
      case HeadKind::tt_2:
        layers.push_back(std::make_unique<TTDense>(tt_layer_random(
            cfg.hidden_in_shape(l), cfg.hidden_out_shape(l), cfg.tt_ranks[l], seed)));
        break;
      case HeadKind::tucker: {
        TuckerLinearLayer t;
        t.weights = tucker_random(cfg.tucker_in_dims(l), cfg.tucker_out_dims(l), cfg.tucker_ranks[l], seed);
        t.bias.assign(cfg.fc_dims[l], 0.0);
        layers.push_back(std::make_unique<TuckerDense>(std::move(t)));
        break;
      }
    }
    layers.push_back(std::make_unique<ReLU>());
    width = cfg.fc_dims[l];
  }
  layers.push_back(std::make_unique<Dense>(width, cfg.num_classes, mix_seed(cfg.seed, stream++)));
  if (auto* conv = dynamic_cast<Conv1d*>(layers.front().get())) conv->propagate_input_grad = false;
  return Model(cfg, std::move(layers), head_begin);
}

ParamTable count_parameters(Model& model) {
  ParamTable table;
  for (Index i = 0; i < model.layers().size(); ++i) {
    Layer& layer = *model.layers()[i];
    const Index n = layer.parameter_count();
    if (n == 0) continue;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu", i);
    table.rows.push_back({buf, layer.describe(), n});
    table.total += n;
  }
  return table;
}

LossResult softmax_cross_entropy(const DenseTensor& logits, std::span<const Index> labels) {
  if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be batch x classes");
  const Index batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) throw ShapeError("softmax_cross_entropy: label count mismatch");
  if (batch == 0) throw ShapeError("softmax_cross_entropy: empty batch");

  LossResult out;
  out.grad = DenseTensor(logits.shape());
  double total = 0.0;
  for (Index b = 0; b < batch; ++b) {
    if (labels[b] >= classes) {
      throw LabelError("label " + std::to_string(labels[b]) + " outside [0, " + std::to_string(classes) + ")");
    }
    const double* z = logits.data().data() + b * classes;
    double* g = out.grad.data().data() + b * classes;
    const double zmax = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (Index c = 0; c < classes; ++c) {
      g[c] = std::exp(z[c] - zmax);
      sum += g[c];
    }
    total += -(z[labels[b]] - zmax - std::log(sum));
    for (Index c = 0; c < classes; ++c) g[c] /= sum;
    g[labels[b]] -= 1.0;
    for (Index c = 0; c < classes; ++c) g[c] /= static_cast<double>(batch);
  }
  out.loss = total / static_cast<double>(batch);
  return out;
}

}  // namespace ttk
