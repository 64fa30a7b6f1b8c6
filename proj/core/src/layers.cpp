#include "ttk/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ttk/error.hpp"
#include "ttk/parallel.hpp"

namespace ttk {

namespace {

constexpr Index kSampleChunk = 4;

void uniform_fill(DenseTensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
}

void require_rank(const DenseTensor& x, Index rank, const char* who) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(who) + ": expected rank-" + std::to_string(rank) + " input, got " +
                     x.shape().to_string());
  }
}

void require_finite(const DenseTensor& x, const char* who) {
  if (!all_finite(x.data())) throw NumericError(std::string(who) + ": non-finite input");
}

DenseTensor zeros_like(const DenseTensor& t) { return DenseTensor(t.shape()); }

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::batchnorm1d: return "batchnorm1d";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::globalavgpool: return "globalavgpool";
    case LayerKind::dense: return "dense";
    case LayerKind::tt_dense: return "tt_dense";
    case LayerKind::tucker_dense: return "tucker_dense";
    case LayerKind::relu: return "relu";
  }
  return "unknown";
}

Index Layer::parameter_count() {
  Index n = 0;
  for (const ParamRef& p : parameters()) n += p.value->size();
  return n;
}

void Layer::zero_grad() {
  for (const ParamRef& p : parameters()) p.grad->fill(0.0);
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(Index in_channels, Index out_channels, Index kernel, Index stride, std::uint64_t seed)
    : weight(Shape{out_channels, in_channels, kernel}),
      bias(Shape{out_channels}),
      weight_grad(Shape{out_channels, in_channels, kernel}),
      bias_grad(Shape{out_channels}),
      stride_(stride) {
  if (stride == 0) throw ConfigError("conv1d stride must be >= 1");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel));
  uniform_fill(weight, bound, rng);
  uniform_fill(bias, bound, rng);
}

Index Conv1d::output_length(Index time, Index kernel, Index stride) {
  if (time < kernel) {
    throw ShapeError("conv1d: input length " + std::to_string(time) + " shorter than kernel " +
                     std::to_string(kernel));
  }
  return (time - kernel) / stride + 1;
}

DenseTensor Conv1d::forward(const DenseTensor& x, Mode mode) {
  require_rank(x, 3, "conv1d");
  require_finite(x, "conv1d");
  const Index batch = x.dim(0), cin = x.dim(1), time = x.dim(2);
  const Index cout = weight.dim(0), kernel = weight.dim(2);
  if (cin != weight.dim(1)) throw ShapeError("conv1d: channel mismatch");
  const Index tout = output_length(time, kernel, stride_);

  DenseTensor y(Shape{batch, cout, tout});
  const double* w = weight.data().data();
  const double* xs = x.data().data();
  double* ys = y.data().data();
  const Index stride = stride_;
  parallel_chunks(batch, kSampleChunk, [&](Index, Index b0, Index b1) {
    for (Index b = b0; b < b1; ++b) {
      for (Index o = 0; o < cout; ++o) {
        double* yrow = ys + (b * cout + o) * tout;
        std::fill(yrow, yrow + tout, bias[o]);
        for (Index c = 0; c < cin; ++c) {
          const double* xrow = xs + (b * cin + c) * time;
          const double* wrow = w + (o * cin + c) * kernel;
          if (stride == 1) {
            for (Index k = 0; k < kernel; ++k) {
              const double wv = wrow[k];
              const double* xk = xrow + k;
              for (Index t = 0; t < tout; ++t) yrow[t] += wv * xk[t];
            }
          } else {
            for (Index t = 0; t < tout; ++t) {
              const double* xt = xrow + t * stride;
              double acc = 0.0;
              for (Index k = 0; k < kernel; ++k) acc += wrow[k] * xt[k];
              yrow[t] += acc;
            }
          }
        }
      }
    }
  });
  if (mode == Mode::train) input_ = x;
  return y;
}

DenseTensor Conv1d::backward(const DenseTensor& grad_out) {
  if (input_.size() == 0) throw StateError("conv1d backward without forward");
  const Index batch = input_.dim(0), cin = input_.dim(1), time = input_.dim(2);
  const Index cout = weight.dim(0), kernel = weight.dim(2);
  const Index tout = output_length(time, kernel, stride_);
  if (grad_out.shape() != Shape{batch, cout, tout}) throw ShapeError("conv1d: grad_out shape mismatch");

  DenseTensor grad_in(input_.shape());
  const Index chunks = chunk_count(batch, kSampleChunk);
  std::vector<std::vector<double>> wparts(chunks, std::vector<double>(weight.size(), 0.0));
  std::vector<std::vector<double>> bparts(chunks, std::vector<double>(cout, 0.0));
  const double* w = weight.data().data();
  const double* xs = input_.data().data();
  const double* gs = grad_out.data().data();
  double* dxs = grad_in.data().data();
  const Index stride = stride_;
  const bool want_input = propagate_input_grad;

  parallel_chunks(batch, kSampleChunk, [&](Index chunk, Index b0, Index b1) {
    double* dw = wparts[chunk].data();
    double* db = bparts[chunk].data();
    for (Index b = b0; b < b1; ++b) {
      for (Index o = 0; o < cout; ++o) {
        const double* grow = gs + (b * cout + o) * tout;
        double bsum = 0.0;
        for (Index t = 0; t < tout; ++t) bsum += grow[t];
        db[o] += bsum;
        for (Index c = 0; c < cin; ++c) {
          const double* xrow = xs + (b * cin + c) * time;
          const double* wrow = w + (o * cin + c) * kernel;
          double* dwrow = dw + (o * cin + c) * kernel;
          double* dxrow = dxs + (b * cin + c) * time;
          if (stride == 1) {
            for (Index k = 0; k < kernel; ++k) {
              const double* xk = xrow + k;
              double acc = 0.0;
              for (Index t = 0; t < tout; ++t) acc += grow[t] * xk[t];
              dwrow[k] += acc;
              if (want_input) {
                const double wv = wrow[k];
                double* dxk = dxrow + k;
                for (Index t = 0; t < tout; ++t) dxk[t] += wv * grow[t];
              }
            }
          } else {
            for (Index t = 0; t < tout; ++t) {
              const double g = grow[t];
              const double* xt = xrow + t * stride;
              for (Index k = 0; k < kernel; ++k) dwrow[k] += g * xt[k];
              if (want_input) {
                double* dxt = dxrow + t * stride;
                for (Index k = 0; k < kernel; ++k) dxt[k] += g * wrow[k];
              }
            }
          }
        }
      }
    }
  });

  for (Index c = 0; c < chunks; ++c) {
    for (Index i = 0; i < weight.size(); ++i) weight_grad[i] += wparts[c][i];
    for (Index o = 0; o < cout; ++o) bias_grad[o] += bparts[c][o];
  }
  return grad_in;
}

std::vector<ParamRef> Conv1d::parameters() {
  return {{"weight", &weight, &weight_grad}, {"bias", &bias, &bias_grad}};
}

std::string Conv1d::describe() const {
  return "conv1d " + std::to_string(weight.dim(1)) + "->" + std::to_string(weight.dim(0)) + " k" +
         std::to_string(weight.dim(2)) + " s" + std::to_string(stride_);
}

// ---------------------------------------------------------------- BatchNorm1d

BatchNorm1d::BatchNorm1d(Index channels)
    : gamma(Shape{channels}, 1.0),
      beta(Shape{channels}, 0.0),
      gamma_grad(Shape{channels}),
      beta_grad(Shape{channels}),
      running_mean(Shape{channels}, 0.0),
      running_var(Shape{channels}, 1.0) {}

namespace {

struct ChannelLayout {
  Index batch, channels, time;
};

ChannelLayout channel_layout(const DenseTensor& x) {
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2)};
  if (x.rank() == 2) return {x.dim(0), x.dim(1), 1};
  throw ShapeError("batchnorm1d: expected batch x channels [x time] input, got " + x.shape().to_string());
}

}  // namespace

DenseTensor BatchNorm1d::forward(const DenseTensor& x, Mode mode) {
  require_finite(x, "batchnorm1d");
  const ChannelLayout l = channel_layout(x);
  if (l.channels != gamma.size()) throw ShapeError("batchnorm1d: channel mismatch");
  const Index count = l.batch * l.time;
  DenseTensor y(x.shape());
  const double* xs = x.data().data();
  double* ys = y.data().data();

  if (mode == Mode::eval) {
    for (Index c = 0; c < l.channels; ++c) {
      const double inv = 1.0 / std::sqrt(running_var[c] + kEpsilon);
      const double m = running_mean[c];
      for (Index b = 0; b < l.batch; ++b) {
        const Index off = (b * l.channels + c) * l.time;
        for (Index t = 0; t < l.time; ++t) ys[off + t] = gamma[c] * (xs[off + t] - m) * inv + beta[c];
      }
    }
    return y;
  }

  if (count < 2) throw ShapeError("batchnorm1d: train mode needs more than one value per channel");
  normalized_ = DenseTensor(x.shape());
  inv_std_.assign(l.channels, 0.0);
  double* xhat = normalized_.data().data();
  for (Index c = 0; c < l.channels; ++c) {
    double mean = 0.0;
    for (Index b = 0; b < l.batch; ++b) {
      const Index off = (b * l.channels + c) * l.time;
      for (Index t = 0; t < l.time; ++t) mean += xs[off + t];
    }
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (Index b = 0; b < l.batch; ++b) {
      const Index off = (b * l.channels + c) * l.time;
      for (Index t = 0; t < l.time; ++t) {
        const double d = xs[off + t] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(count);
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    inv_std_[c] = inv;
    for (Index b = 0; b < l.batch; ++b) {
      const Index off = (b * l.channels + c) * l.time;
      for (Index t = 0; t < l.time; ++t) {
        xhat[off + t] = (xs[off + t] - mean) * inv;
        ys[off + t] = gamma[c] * xhat[off + t] + beta[c];
      }
    }
    const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
    running_mean[c] = (1.0 - kMomentum) * running_mean[c] + kMomentum * mean;
    running_var[c] = (1.0 - kMomentum) * running_var[c] + kMomentum * unbiased;
  }
  return y;
}

DenseTensor BatchNorm1d::backward(const DenseTensor& grad_out) {
  if (normalized_.size() == 0) throw StateError("batchnorm1d backward without train-mode forward");
  if (grad_out.shape() != normalized_.shape()) throw ShapeError("batchnorm1d: grad_out shape mismatch");
  const ChannelLayout l = channel_layout(normalized_);
  const double n = static_cast<double>(l.batch * l.time);
  DenseTensor grad_in(grad_out.shape());
  const double* g = grad_out.data().data();
  const double* xhat = normalized_.data().data();
  double* dx = grad_in.data().data();
  for (Index c = 0; c < l.channels; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (Index b = 0; b < l.batch; ++b) {
      const Index off = (b * l.channels + c) * l.time;
      for (Index t = 0; t < l.time; ++t) {
        sum_g += g[off + t];
        sum_gx += g[off + t] * xhat[off + t];
      }
    }
    gamma_grad[c] += sum_gx;
    beta_grad[c] += sum_g;
    const double k = gamma[c] * inv_std_[c] / n;
    for (Index b = 0; b < l.batch; ++b) {
      const Index off = (b * l.channels + c) * l.time;
      for (Index t = 0; t < l.time; ++t) {
        dx[off + t] = k * (n * g[off + t] - sum_g - xhat[off + t] * sum_gx);
      }
    }
  }
  return grad_in;
}

std::vector<ParamRef> BatchNorm1d::parameters() {
  return {{"gamma", &gamma, &gamma_grad}, {"beta", &beta, &beta_grad}};
}

std::vector<ParamRef> BatchNorm1d::buffers() {
  return {{"running_mean", &running_mean, nullptr}, {"running_var", &running_var, nullptr}};
}

std::string BatchNorm1d::describe() const { return "batchnorm1d " + std::to_string(gamma.size()); }

// ---------------------------------------------------------------- MaxPool1d

DenseTensor MaxPool1d::forward(const DenseTensor& x, Mode mode) {
  require_rank(x, 3, "maxpool1d");
  const Index batch = x.dim(0), channels = x.dim(1), time = x.dim(2);
  if (time < kernel_) {
    throw ShapeError("maxpool1d: input length " + std::to_string(time) + " shorter than kernel " +
                     std::to_string(kernel_));
  }
  const Index tout = time / kernel_;
  DenseTensor y(Shape{batch, channels, tout});
  std::vector<Index> argmax(y.size());
  const double* xs = x.data().data();
  for (Index row = 0; row < batch * channels; ++row) {
    const double* xrow = xs + row * time;
    for (Index t = 0; t < tout; ++t) {
      Index best = t * kernel_;
      for (Index k = 1; k < kernel_; ++k) {
        if (xrow[t * kernel_ + k] > xrow[best]) best = t * kernel_ + k;
      }
      y[row * tout + t] = xrow[best];
      argmax[row * tout + t] = row * time + best;
    }
  }
  if (mode == Mode::train) {
    input_shape_ = x.shape();
    argmax_ = std::move(argmax);
  }
  return y;
}

DenseTensor MaxPool1d::backward(const DenseTensor& grad_out) {
  if (argmax_.empty()) throw StateError("maxpool1d backward without forward");
  if (grad_out.size() != argmax_.size()) throw ShapeError("maxpool1d: grad_out shape mismatch");
  DenseTensor grad_in(input_shape_);
  for (Index n = 0; n < argmax_.size(); ++n) grad_in[argmax_[n]] += grad_out[n];
  return grad_in;
}

std::string MaxPool1d::describe() const { return "maxpool1d k" + std::to_string(kernel_); }

// ---------------------------------------------------------------- GlobalAvgPool

DenseTensor GlobalAvgPool::forward(const DenseTensor& x, Mode mode) {
  require_rank(x, 3, "globalavgpool");
  const Index batch = x.dim(0), channels = x.dim(1), time = x.dim(2);
  DenseTensor y(Shape{batch, channels});
  for (Index row = 0; row < batch * channels; ++row) {
    double acc = 0.0;
    for (Index t = 0; t < time; ++t) acc += x[row * time + t];
    y[row] = acc / static_cast<double>(time);
  }
  if (mode == Mode::train) input_shape_ = x.shape();
  return y;
}

DenseTensor GlobalAvgPool::backward(const DenseTensor& grad_out) {
  if (input_shape_.rank() != 3) throw StateError("globalavgpool backward without forward");
  const Index time = input_shape_[2];
  DenseTensor grad_in(input_shape_);
  for (Index row = 0; row < grad_out.size(); ++row) {
    const double g = grad_out[row] / static_cast<double>(time);
    for (Index t = 0; t < time; ++t) grad_in[row * time + t] = g;
  }
  return grad_in;
}

// ---------------------------------------------------------------- ReLU

DenseTensor ReLU::forward(const DenseTensor& x, Mode mode) {
  DenseTensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  if (mode == Mode::train) input_ = x;
  return y;
}

DenseTensor ReLU::backward(const DenseTensor& grad_out) {
  if (input_.size() == 0) throw StateError("relu backward without forward");
  if (grad_out.shape() != input_.shape()) throw ShapeError("relu: grad_out shape mismatch");
  DenseTensor grad_in = grad_out;
  for (Index n = 0; n < grad_in.size(); ++n) {
    if (input_[n] <= 0.0) grad_in[n] = 0.0;
  }
  return grad_in;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(Index in_features, Index out_features, std::uint64_t seed)
    : weight(Shape{out_features, in_features}),
      bias(Shape{out_features}),
      weight_grad(Shape{out_features, in_features}),
      bias_grad(Shape{out_features}) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  uniform_fill(weight, bound, rng);
  uniform_fill(bias, bound, rng);
}

Dense::Dense(Matrix w, std::vector<double> b)
    : weight(Shape{w.rows(), w.cols()}, std::vector<double>(w.data().begin(), w.data().end())),
      bias(Shape{w.rows()}, std::move(b)),
      weight_grad(Shape{w.rows(), w.cols()}),
      bias_grad(Shape{w.rows()}) {}

Matrix Dense::weight_matrix() const { return as_matrix(weight, out_features(), in_features()); }

DenseTensor Dense::forward(const DenseTensor& x, Mode mode) {
  require_rank(x, 2, "dense");
  require_finite(x, "dense");
  if (x.dim(1) != in_features()) throw ShapeError("dense: input width mismatch");
  Matrix y = matmul_nt(as_matrix(x, x.dim(0), x.dim(1)), weight_matrix());
  for (Index b = 0; b < y.rows(); ++b)
    for (Index o = 0; o < y.cols(); ++o) y(b, o) += bias[o];
  if (mode == Mode::train) input_ = x;
  return as_tensor(y);
}

DenseTensor Dense::backward(const DenseTensor& grad_out) {
  if (input_.size() == 0) throw StateError("dense backward without forward");
  const Index batch = input_.dim(0);
  if (grad_out.shape() != Shape{batch, out_features()}) throw ShapeError("dense: grad_out shape mismatch");
  const Matrix g = as_matrix(grad_out, batch, out_features());
  const Matrix dw = matmul_tn(g, as_matrix(input_, batch, in_features()));
  for (Index n = 0; n < dw.size(); ++n) weight_grad[n] += dw.data()[n];
  for (Index b = 0; b < batch; ++b)
    for (Index o = 0; o < out_features(); ++o) bias_grad[o] += g(b, o);
  return as_tensor(matmul(g, weight_matrix()));
}

std::vector<ParamRef> Dense::parameters() {
  return {{"weight", &weight, &weight_grad}, {"bias", &bias, &bias_grad}};
}

std::string Dense::describe() const {
  return "dense " + std::to_string(in_features()) + "->" + std::to_string(out_features());
}

// ---------------------------------------------------------------- TTDense

TTDense::TTDense(TTLinearLayer layer) : layer_(std::move(layer)) {
  layer_.validate();
  bias_ = DenseTensor(Shape{layer_.bias.size()}, layer_.bias);
  bias_grad_ = DenseTensor(bias_.shape());
  for (const DenseTensor& core : layer_.weights.cores) core_grads_.push_back(zeros_like(core));
}

LayerPtr TTDense::clone() const { return std::make_unique<TTDense>(*this); }

TTLinearLayer TTDense::layer() const {
  TTLinearLayer out = layer_;
  out.bias = bias_.storage();
  return out;
}

DenseTensor TTDense::forward(const DenseTensor& x, Mode mode) {
  layer_.bias = bias_.storage();
  return tt_forward(layer_, x, mode == Mode::train ? &cache_ : nullptr);
}

DenseTensor TTDense::backward(const DenseTensor& grad_out) {
  TTGradients g = tt_backward(layer_, cache_, grad_out);
  for (Index k = 0; k < g.cores.size(); ++k) {
    for (Index n = 0; n < g.cores[k].size(); ++n) core_grads_[k][n] += g.cores[k][n];
  }
  for (Index o = 0; o < g.bias.size(); ++o) bias_grad_[o] += g.bias[o];
  return std::move(g.input);
}

std::vector<ParamRef> TTDense::parameters() {
  std::vector<ParamRef> out;
  for (Index k = 0; k < layer_.weights.cores.size(); ++k) {
    out.push_back({"core" + std::to_string(k), &layer_.weights.cores[k], &core_grads_[k]});
  }
  out.push_back({"bias", &bias_, &bias_grad_});
  return out;
}

std::string TTDense::describe() const {
  std::string ranks;
  for (Index r : layer_.weights.ranks.values()) ranks += (ranks.empty() ? "" : ",") + std::to_string(r);
  return "tt_dense " + layer_.in_dims().to_string() + "->" + layer_.out_dims().to_string() +
         " ranks(" + ranks + ")";
}

// ---------------------------------------------------------------- TuckerDense

TuckerDense::TuckerDense(TuckerLinearLayer layer) : layer_(std::move(layer)) {
  layer_.weights.validate();
  if (layer_.bias.size() != layer_.out_features()) throw ShapeError("Tucker layer bias length mismatch");
  for (Index k = 0; k < 4; ++k) {
    factors_[k] = as_tensor(layer_.weights.factors[k]);
    factor_grads_[k] = zeros_like(factors_[k]);
  }
  bias_ = DenseTensor(Shape{layer_.bias.size()}, layer_.bias);
  bias_grad_ = zeros_like(bias_);
  core_grad_ = zeros_like(layer_.weights.core);
}

LayerPtr TuckerDense::clone() const { return std::make_unique<TuckerDense>(*this); }

void TuckerDense::sync_from_tensors() {
  for (Index k = 0; k < 4; ++k) {
    layer_.weights.factors[k] = as_matrix(factors_[k], factors_[k].dim(0), factors_[k].dim(1));
  }
  layer_.bias = bias_.storage();
}

TuckerLinearLayer TuckerDense::layer() const {
  TuckerLinearLayer out = layer_;
  for (Index k = 0; k < 4; ++k) {
    out.weights.factors[k] = as_matrix(factors_[k], factors_[k].dim(0), factors_[k].dim(1));
  }
  out.bias = bias_.storage();
  return out;
}

DenseTensor TuckerDense::forward(const DenseTensor& x, Mode mode) {
  sync_from_tensors();
  require_finite(x, "tucker_dense");
  return tucker_layer_forward(layer_, x, mode == Mode::train ? &cache_ : nullptr);
}

DenseTensor TuckerDense::backward(const DenseTensor& grad_out) {
  TuckerGradients g = tucker_layer_backward(layer_, cache_, grad_out);
  for (Index n = 0; n < g.core.size(); ++n) core_grad_[n] += g.core[n];
  for (Index k = 0; k < 4; ++k) {
    for (Index n = 0; n < g.factors[k].size(); ++n) factor_grads_[k][n] += g.factors[k].data()[n];
  }
  for (Index o = 0; o < g.bias.size(); ++o) bias_grad_[o] += g.bias[o];
  return std::move(g.input);
}

std::vector<ParamRef> TuckerDense::parameters() {
  std::vector<ParamRef> out{{"core", &layer_.weights.core, &core_grad_}};
  for (Index k = 0; k < 4; ++k) out.push_back({"factor" + std::to_string(k), &factors_[k], &factor_grads_[k]});
  out.push_back({"bias", &bias_, &bias_grad_});
  return out;
}

std::string TuckerDense::describe() const {
  const TuckerRanks r = layer_.weights.ranks();
  return "tucker_dense " + layer_.weights.in_dims.to_string() + "->" +
         layer_.weights.out_dims.to_string() + " ranks(" + std::to_string(r[0]) + "," +
         std::to_string(r[1]) + "," + std::to_string(r[2]) + "," + std::to_string(r[3]) + ")";
}

}  // namespace ttk
