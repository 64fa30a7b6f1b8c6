#include "ttk/ttlayer.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ttk/error.hpp"

namespace ttk {

void TTLinearLayer::validate() const {
  weights.validate();
  if (bias.size() != weights.rows()) {
    throw ShapeError("TT layer bias length " + std::to_string(bias.size()) +
                     " != output features " + std::to_string(weights.rows()));
  }
}

void TTForwardCache::clear() {
  states.clear();
  pre_activation.clear();
  batch = 0;
}

namespace {

// Core k rearranged as a (R_{k-1} * I_k) × (J_k * R_k) matrix.
std::vector<double> permuted_core(const DenseTensor& core) {
  const Index nj = core.dim(0), ni = core.dim(1), r0 = core.dim(2), r1 = core.dim(3);
  std::vector<double> g(r0 * ni * nj * r1);
  const double* src = core.data().data();
  for (Index j = 0; j < nj; ++j)
    for (Index i = 0; i < ni; ++i)
      for (Index a = 0; a < r0; ++a)
        for (Index b = 0; b < r1; ++b)
          g[(a * ni + i) * (nj * r1) + (j * r1 + b)] = src[((j * ni + i) * r0 + a) * r1 + b];
  return g;
}

struct StepDims {
  Index prefix;  // batch * prod_{<k} J
  Index in_rows;   // R_{k-1} * I_k
  Index out_rows;  // J_k * R_k
  Index suffix;    // prod_{>k} I
};

StepDims step_dims(const TTLinearLayer& layer, Index batch, Index k) {
  const TTMatrix& w = layer.weights;
  StepDims d{batch, w.ranks[k] * w.in_dims[k], w.out_dims[k] * w.ranks[k + 1], 1};
  for (Index q = 0; q < k; ++q) d.prefix *= w.out_dims[q];
  for (Index q = k + 1; q < w.order(); ++q) d.suffix *= w.in_dims[q];
  return d;
}

void check_input(const TTLinearLayer& layer, const DenseTensor& x) {
  if (x.rank() != 2 || x.dim(1) != layer.in_features()) {
    throw ShapeError("tt_forward: expected batch x " + std::to_string(layer.in_features()) +
                     " input, got " + x.shape().to_string());
  }
  if (!all_finite(x.data())) throw NumericError("tt_forward: non-finite input");
}

}  // namespace

DenseTensor tt_forward(const TTLinearLayer& layer, const DenseTensor& x, TTForwardCache* cache) {
  layer.validate();
  check_input(layer, x);
  const Index batch = x.dim(0);
  const Index order = layer.weights.order();

  if (cache) {
    cache->clear();
    cache->batch = batch;
  }

  std::vector<double> state = x.storage();
  for (Index k = 0; k < order; ++k) {
    const StepDims d = step_dims(layer, batch, k);
    const std::vector<double> g = permuted_core(layer.weights.cores[k]);
    std::vector<double> next(d.prefix * d.out_rows * d.suffix, 0.0);
    for (Index p = 0; p < d.prefix; ++p) {
      const double* in = state.data() + p * d.in_rows * d.suffix;
      double* out = next.data() + p * d.out_rows * d.suffix;
      for (Index ri = 0; ri < d.in_rows; ++ri) {
        const double* in_row = in + ri * d.suffix;
        const double* g_row = g.data() + ri * d.out_rows;
        for (Index jr = 0; jr < d.out_rows; ++jr) {
          const double gv = g_row[jr];
          if (gv == 0.0) continue;
          double* out_row = out + jr * d.suffix;
          for (Index s = 0; s < d.suffix; ++s) out_row[s] += gv * in_row[s];
        }
      }
    }
    if (cache) cache->states.push_back(std::move(state));
    state = std::move(next);
  }

  const Index nout = layer.out_features();
  for (Index b = 0; b < batch; ++b)
    for (Index o = 0; o < nout; ++o) state[b * nout + o] += layer.bias[o];
  if (cache) cache->pre_activation = state;
  if (layer.activation == Activation::relu) {
    for (double& v : state) v = v > 0.0 ? v : 0.0;
  }
  return DenseTensor(Shape{batch, nout}, std::move(state));
}

TTGradients tt_backward(const TTLinearLayer& layer, const TTForwardCache& cache,
                        const DenseTensor& grad_out) {
  if (cache.empty()) throw StateError("tt_backward called without a forward cache");
  layer.validate();
  const Index batch = cache.batch;
  const Index order = layer.weights.order();
  const Index nout = layer.out_features();
  if (cache.states.size() != order) throw StateError("tt_backward: cache does not match layer");
  if (grad_out.rank() != 2 || grad_out.dim(0) != batch || grad_out.dim(1) != nout) {
    throw ShapeError("tt_backward: grad_out shape " + grad_out.shape().to_string());
  }

  std::vector<double> delta = grad_out.storage();
  if (layer.activation == Activation::relu) {
    for (Index n = 0; n < delta.size(); ++n) {
      if (cache.pre_activation[n] <= 0.0) delta[n] = 0.0;
    }
  }

  TTGradients grads;
  grads.bias.assign(nout, 0.0);
  for (Index b = 0; b < batch; ++b)
    for (Index o = 0; o < nout; ++o) grads.bias[o] += delta[b * nout + o];

  grads.cores.resize(order);
  for (Index k = order; k-- > 0;) {
    const DenseTensor& core = layer.weights.cores[k];
    const StepDims d = step_dims(layer, batch, k);
    const std::vector<double> g = permuted_core(core);
    const std::vector<double>& state = cache.states[k];
    std::vector<double> dg(g.size(), 0.0);
    std::vector<double> dstate(state.size(), 0.0);
    for (Index p = 0; p < d.prefix; ++p) {
      const double* in = state.data() + p * d.in_rows * d.suffix;
      const double* dout = delta.data() + p * d.out_rows * d.suffix;
      double* din = dstate.data() + p * d.in_rows * d.suffix;
      for (Index ri = 0; ri < d.in_rows; ++ri) {
        const double* in_row = in + ri * d.suffix;
        const double* g_row = g.data() + ri * d.out_rows;
        double* dg_row = dg.data() + ri * d.out_rows;
        double* din_row = din + ri * d.suffix;
        for (Index jr = 0; jr < d.out_rows; ++jr) {
          const double* dout_row = dout + jr * d.suffix;
          const double gv = g_row[jr];
          double acc = 0.0;
          for (Index s = 0; s < d.suffix; ++s) {
            acc += in_row[s] * dout_row[s];
            din_row[s] += gv * dout_row[s];
          }
          dg_row[jr] += acc;
        }
      }
    }

    const Index nj = core.dim(0), ni = core.dim(1), r0 = core.dim(2), r1 = core.dim(3);
    DenseTensor dcore(core.shape());
    for (Index j = 0; j < nj; ++j)
      for (Index i = 0; i < ni; ++i)
        for (Index a = 0; a < r0; ++a)
          for (Index b = 0; b < r1; ++b)
            dcore[((j * ni + i) * r0 + a) * r1 + b] = dg[(a * ni + i) * (nj * r1) + (j * r1 + b)];
    grads.cores[k] = std::move(dcore);
    delta = std::move(dstate);
  }
  grads.input = DenseTensor(Shape{batch, layer.in_features()}, std::move(delta));
  return grads;
}

TTLinearLayer tt_layer_random(const Shape& in_dims, const Shape& out_dims, const RankVector& ranks,
                              std::uint64_t seed, Activation activation) {
  const Index order = in_dims.rank();
  if (order == 0 || out_dims.rank() != order || ranks.cores() != order) {
    throw ShapeError("tt_layer_random: inconsistent dims/ranks");
  }
  double rank_product = 1.0;
  for (Index r : ranks.values()) rank_product *= static_cast<double>(r);
  const double k2 = 2.0 * static_cast<double>(order);
  const double sigma = std::pow(static_cast<double>(in_dims.numel()), -1.0 / k2) *
                       std::pow(rank_product, -1.0 / k2);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  TTLinearLayer layer;
  layer.activation = activation;
  layer.weights.in_dims = in_dims;
  layer.weights.out_dims = out_dims;
  layer.weights.ranks = ranks;
  for (Index k = 0; k < order; ++k) {
    DenseTensor core(Shape{out_dims[k], in_dims[k], ranks[k], ranks[k + 1]});
    for (double& v : core.data()) v = normal(rng);
    layer.weights.cores.push_back(std::move(core));
  }
  layer.bias.assign(out_dims.numel(), 0.0);
  return layer;
}

TTLinearLayer tt_layer_from_dense(const Matrix& w, std::span<const double> bias,
                                  const Shape& in_dims, const Shape& out_dims,
                                  const RankVector& max_ranks, Activation activation) {
  if (bias.size() != out_dims.numel()) throw ShapeError("tt_layer_from_dense: bias length mismatch");
  TTLinearLayer layer;
  layer.weights = dense_to_ttm(w, in_dims, out_dims, max_ranks, 0.0);
  layer.bias.assign(bias.begin(), bias.end());
  layer.activation = activation;
  return layer;
}

Index tt_layer_param_count(const TTLinearLayer& layer) {
  return tt_param_count(layer.weights) + layer.bias.size();
}

}  // namespace ttk
