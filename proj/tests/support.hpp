#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ttk/layers.hpp"
#include "ttk/model.hpp"
#include "ttk/tensor.hpp"

namespace ttk::testing {

inline DenseTensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseTensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  const DenseTensor t = random_tensor(Shape{rows, cols}, seed);
  return Matrix(rows, cols, t.storage());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ||a - b|| / max(||a||, ||b||, floor). The floor keeps gradients that are
// zero in exact arithmetic (e.g. a bias feeding batchnorm) from comparing
// round-off against round-off.
inline double rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(std::max(na, nb)), floor);
  return std::sqrt(diff) / scale;
}

// Central differences of a scalar function with respect to every entry of `x`.
inline std::vector<double> numeric_gradient(std::span<double> x, const std::function<double()>& f, double h) {
  std::vector<double> g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double plus = f();
    x[i] = keep - h;
    const double minus = f();
    x[i] = keep;
    g[i] = (plus - minus) / (2.0 * h);
  }
  return g;
}

struct GradReport {
  double worst = 0.0;
  std::string worst_name;
  void add(const std::string& name, double err) {
    if (err > worst || worst_name.empty()) {
      worst = std::max(worst, err);
      worst_name = name;
    }
  }
};

// Checks a layer against L = <forward(x), probe> for a fixed random probe.
inline GradReport check_layer_gradients(Layer& layer, DenseTensor x, std::uint64_t seed, double h = 1e-5,
                                        bool check_input = true) {
  const DenseTensor y = layer.forward(x, Mode::train);
  const DenseTensor probe = random_tensor(y.shape(), seed);
  layer.zero_grad();
  const DenseTensor gx = layer.backward(probe);
  const auto loss = [&] { return dot(layer.forward(x, Mode::train).data(), probe.data()); };

  GradReport report;
  for (ParamRef& p : layer.parameters()) {
    const std::vector<double> analytic(p.grad->data().begin(), p.grad->data().end());
    report.add(p.name, rel_error(analytic, numeric_gradient(p.value->data(), loss, h)));
  }
  if (check_input) report.add("input", rel_error(gx.data(), numeric_gradient(x.data(), loss, h)));
  return report;
}

// Whole-model check of mean softmax cross-entropy.
inline GradReport check_model_gradients(Model& model, const DenseTensor& x, std::span<const Index> labels,
                                        double h = 1e-4) {
  const DenseTensor logits = model.forward(x, Mode::train);
  model.zero_grad();
  model.backward(softmax_cross_entropy(logits, labels).grad);
  const auto loss = [&] { return softmax_cross_entropy(model.forward(x, Mode::train), labels).loss; };
  GradReport report;
  for (ParamRef& p : model.parameters()) {
    const std::vector<double> analytic(p.grad->data().begin(), p.grad->data().end());
    report.add(p.name, rel_error(analytic, numeric_gradient(p.value->data(), loss, h)));
  }
  return report;
}

// Two conv blocks, one TT hidden layer, 8 classes; accepts inputs of length 256.
inline ModelConfig tiny_tt_config(std::uint64_t seed = 3) {
  ModelConfig cfg;
  cfg.conv_channels = {4, 4};
  cfg.conv_kernels = {8, 3};
  cfg.conv_strides = {4, 1};
  cfg.pool_kernel = 2;
  cfg.fc_dims = {8};
  cfg.fc_input_shape = Shape{2, 2};
  cfg.fc_shapes = {Shape{2, 4}};
  cfg.num_classes = 8;
  cfg.head_kind = HeadKind::tt_1;
  cfg.tt_ranks = {RankVector{1, 2, 1}};
  cfg.seed = seed;
  return cfg;
}

}  // namespace ttk::testing
