#include "convert.hpp"

#include "ttk/error.hpp"

namespace ttk::cli {

namespace {

std::string join(std::span<const Index> v) {
  std::string s = "(";
  for (Index k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s + ")";
}

double relative_error(const Matrix& w, const Matrix& approx) {
  const double n = frobenius_norm(w);
  const double d = frobenius_norm(subtract(w, approx));
  return n == 0.0 ? d : d / n;
}

}  // namespace

ConversionResult convert_head(const Model& dense, ConvertMethod method, Index rank) {
  const ModelConfig& src = dense.config();
  if (src.head_kind != HeadKind::dense) {
    throw StateError(std::string("convert expects a dense head, checkpoint has ") + to_string(src.head_kind));
  }
  ConversionResult result{dense, {}};
  ModelConfig& cfg = result.model.mutable_config();
  cfg.tt_ranks.clear();
  cfg.tucker_ranks.clear();
  if (method == ConvertMethod::tt) {
    cfg.head_kind = cfg.fc_dims.back() == 1024 ? HeadKind::tt_2 : HeadKind::tt_1;
  } else {
    cfg.head_kind = HeadKind::tucker;
    cfg.tucker_ranks = rank == 0 ? default_tucker_ranks(cfg) : capped_tucker_ranks(cfg, rank);
  }

  for (Index l = 0; l < cfg.fc_dims.size(); ++l) {
    LayerPtr& slot = result.model.layers()[result.model.head_begin() + 2 * l];
    const auto* layer = dynamic_cast<const Dense*>(slot.get());
    if (!layer) throw StateError("hidden layer " + std::to_string(l) + " is not dense");
    const Matrix w = layer->weight_matrix();
    const std::vector<double> bias(layer->bias.data().begin(), layer->bias.data().end());
    LayerConversion info;
    info.layer = l;
    info.params_before = w.rows() * w.cols();

    if (method == ConvertMethod::tt) {
      const Index cores = cfg.hidden_in_shape(l).rank();
      const RankVector caps = rank == 0 ? RankVector::unbounded(cores) : RankVector::uniform(cores, rank);
      TTLinearLayer tt = tt_layer_from_dense(w, bias, cfg.hidden_in_shape(l), cfg.hidden_out_shape(l), caps);
      info.rel_error = relative_error(w, ttm_to_dense(tt.weights));
      info.params_after = tt_param_count(tt.weights);
      info.ranks = join(tt.weights.ranks.values());
      cfg.tt_ranks.push_back(tt.weights.ranks);
      slot = std::make_unique<TTDense>(std::move(tt));
    } else {
      TuckerLinearLayer t;
      t.weights = hosvd(w, cfg.tucker_in_dims(l), cfg.tucker_out_dims(l), cfg.tucker_ranks[l]);
      t.bias = bias;
      info.rel_error = relative_error(w, tucker_reconstruct(t.weights));
      info.params_after = tucker_param_count(t.weights);
      info.ranks = join(cfg.tucker_ranks[l]);
      slot = std::make_unique<TuckerDense>(std::move(t));
    }
    result.layers.push_back(std::move(info));
  }
  cfg.validate();
  return result;
}

}  // namespace ttk::cli
