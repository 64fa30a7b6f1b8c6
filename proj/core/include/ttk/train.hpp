#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ttk/model.hpp"
#include "ttk/speechcmd.hpp"

namespace ttk {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moments are allocated on the first step and matched
// to parameters by position, so the parameter list must keep its order.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<const ParamRef> params);

  const AdamConfig& config() const { return config_; }
  AdamConfig& config() { return config_; }
  Index steps() const { return steps_; }
  const std::vector<DenseTensor>& first_moments() const { return m_; }
  const std::vector<DenseTensor>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  Index steps_ = 0;
  std::vector<DenseTensor> m_;
  std::vector<DenseTensor> v_;
};

struct EpochMetrics {
  Index epoch = 0;
  double train_ce = 0.0;   // mean mini-batch loss during the epoch
  double val_ce = 0.0;
  double val_acc = 0.0;    // percent
};

struct TrainOptions {
  Index epochs = 100;
  Index batch_size = 256;
  Index eval_batch_size = 256;
  // Pad batches at least this far; 0 means the model's minimum input length.
  Index min_length = 0;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainState {
  Model model;
  Adam optimizer;
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> history;

  TrainState(Model m, AdamConfig adam, std::uint64_t seed_)
      : model(std::move(m)), optimizer(adam), seed(seed_) {}
};

struct EvalResult {
  double ce = 0.0;
  double accuracy = 0.0;  // percent
};

// Eval-mode pass over every record; mean CE and top-1 accuracy.
EvalResult evaluate(Model& model, std::span<const ClipRecord> records, Index batch_size = 256,
                    Index min_length = 0);

// Shuffled mini-batch training with Adam. Validation metrics use
// `validation` when non-empty, otherwise the training records.
void train(TrainState& state, std::span<const ClipRecord> train_records,
           std::span<const ClipRecord> validation, const TrainOptions& options);

}  // namespace ttk
