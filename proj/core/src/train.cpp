#include "ttk/train.hpp"

#include <algorithm>

#include "ttk/error.hpp"

namespace ttk {

namespace {

Index argmax_row(const DenseTensor& logits, Index row) {
  const Index classes = logits.dim(1);
  const double* z = logits.data().data() + row * classes;
  return static_cast<Index>(std::max_element(z, z + classes) - z);
}

std::uint64_t epoch_seed(std::uint64_t seed, Index epoch) {
  return seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL * (epoch + 1);
}

}  // namespace

EvalResult evaluate(Model& model, std::span<const ClipRecord> records, Index batch_size,
                    Index min_length) {
  if (records.empty()) throw DataError("evaluate: empty dataset");
  const Index pad = std::max(min_length, model.config().min_input_length());
  double ce_sum = 0.0;
  Index correct = 0;
  for (const Batch& batch : make_batches(records, batch_size, 0, /*shuffle=*/false, pad)) {
    const DenseTensor logits = model.forward(batch.inputs, Mode::eval);
    const LossResult loss = softmax_cross_entropy(logits, batch.labels);
    ce_sum += loss.loss * static_cast<double>(batch.labels.size());
    for (Index b = 0; b < batch.labels.size(); ++b) {
      if (argmax_row(logits, b) == batch.labels[b]) ++correct;
    }
  }
  const double n = static_cast<double>(records.size());
  return {ce_sum / n, 100.0 * static_cast<double>(correct) / n};
}

void train(TrainState& state, std::span<const ClipRecord> train_records,
           std::span<const ClipRecord> validation, const TrainOptions& options) {
  if (train_records.empty()) throw DataError("train: empty dataset");
  const Index classes = state.model.config().num_classes;
  for (const ClipRecord& r : train_records) {
    if (r.label >= classes) throw LabelError("train: label " + std::to_string(r.label) + " out of range");
  }
  const Index pad = std::max(options.min_length, state.model.config().min_input_length());
  const std::span<const ClipRecord> val = validation.empty() ? train_records : validation;

  for (Index epoch = 0; epoch < options.epochs; ++epoch) {
    const Index epoch_index = state.history.size();
    double loss_sum = 0.0;
    for (const Batch& batch :
         make_batches(train_records, options.batch_size, epoch_seed(state.seed, epoch_index), true, pad)) {
      state.model.zero_grad();
      const DenseTensor logits = state.model.forward(batch.inputs, Mode::train);
      const LossResult loss = softmax_cross_entropy(logits, batch.labels);
      state.model.backward(loss.grad);
      const std::vector<ParamRef> params = state.model.parameters();
      state.optimizer.step(params);
      loss_sum += loss.loss * static_cast<double>(batch.labels.size());
    }
    EpochMetrics m;
    m.epoch = epoch_index;
    m.train_ce = loss_sum / static_cast<double>(train_records.size());
    const EvalResult v = evaluate(state.model, val, options.eval_batch_size, pad);
    m.val_ce = v.ce;
    m.val_acc = v.accuracy;
    state.history.push_back(m);
    if (options.on_epoch) options.on_epoch(m);
  }
}

}  // namespace ttk
