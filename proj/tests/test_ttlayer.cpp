#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "ttk/error.hpp"
#include "ttk/ttlayer.hpp"

using namespace ttk;
using ttk::testing::dot;
using ttk::testing::numeric_gradient;
using ttk::testing::random_matrix;
using ttk::testing::random_tensor;
using ttk::testing::rel_error;

namespace {

// Dense oracle: act(x Wᵀ + b) with W reconstructed from the cores.
DenseTensor dense_oracle(const TTLinearLayer& layer, const DenseTensor& x) {
  const Matrix w = ttm_to_dense(layer.weights);
  const Matrix xm = as_matrix(x, x.dim(0), x.dim(1));
  Matrix y = matmul_nt(xm, w);
  for (Index b = 0; b < y.rows(); ++b)
    for (Index j = 0; j < y.cols(); ++j) {
      y(b, j) += layer.bias[j];
      if (layer.activation == Activation::relu) y(b, j) = std::max(0.0, y(b, j));
    }
  return as_tensor(y);
}

TTLinearLayer random_layer(const Shape& in, const Shape& out, const RankVector& ranks, std::uint64_t seed,
                           Activation act = Activation::identity) {
  TTLinearLayer l = tt_layer_random(in, out, ranks, seed, act);
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& b : l.bias) b = u(rng);
  return l;
}

double max_rel(const DenseTensor& a, const DenseTensor& b) {
  return max_abs_diff(a.data(), b.data()) / std::max(1e-300, frobenius_norm(b) / std::sqrt(double(b.size())));
}

struct FdResult {
  double cores = 0.0, bias = 0.0, input = 0.0;
};

FdResult finite_difference_check(TTLinearLayer layer, DenseTensor x, std::uint64_t seed) {
  TTForwardCache cache;
  const DenseTensor y = tt_forward(layer, x, &cache);
  const DenseTensor probe = random_tensor(y.shape(), seed);
  const TTGradients g = tt_backward(layer, cache, probe);
  const auto loss = [&] { return dot(tt_forward(layer, x).data(), probe.data()); };
  FdResult r;
  for (Index k = 0; k < layer.weights.cores.size(); ++k) {
    r.cores = std::max(r.cores, rel_error(g.cores[k].data(), numeric_gradient(layer.weights.cores[k].data(), loss, 1e-5)));
  }
  r.bias = rel_error(g.bias, numeric_gradient(layer.bias, loss, 1e-5));
  r.input = rel_error(g.input.data(), numeric_gradient(x.data(), loss, 1e-5));
  return r;
}

}  // namespace

TEST(TTForward, ZeroWeightsGiveBias) {
  TTLinearLayer l = tt_layer_random(Shape{2, 3}, Shape{3, 2}, RankVector{1, 2, 1}, 1);
  for (DenseTensor& c : l.weights.cores) c.fill(0.0);
  l.bias = {1, 2, 3, 4, 5, 6};
  const DenseTensor y = tt_forward(l, random_tensor(Shape{2, 6}, 4));
  for (Index b = 0; b < 2; ++b)
    for (Index j = 0; j < 6; ++j) EXPECT_EQ(y.at({b, j}), static_cast<double>(j + 1));
}

TEST(TTForward, FromDenseMatchesMatmul) {
  const Matrix w = random_matrix(64, 64, 2);
  std::vector<double> bias(64);
  for (Index j = 0; j < 64; ++j) bias[j] = 0.01 * static_cast<double>(j);
  const TTLinearLayer l =
      tt_layer_from_dense(w, bias, Shape{4, 4, 2, 2}, Shape{4, 4, 2, 2}, RankVector::unbounded(4));
  const DenseTensor x = random_tensor(Shape{5, 64}, 3);
  const DenseTensor y = tt_forward(l, x);
  const Matrix ref = matmul_nt(as_matrix(x, 5, 64), w);
  for (Index b = 0; b < 5; ++b)
    for (Index j = 0; j < 64; ++j) EXPECT_NEAR(y.at({b, j}), ref(b, j) + bias[j], 1e-10);
}

TEST(TTForward, HiddenLayerShapeMatchesOracle) {
  const TTLinearLayer l = random_layer(Shape{4, 4, 2, 2}, Shape{4, 4, 4, 2}, RankVector{1, 4, 4, 4, 1}, 7);
  const DenseTensor x = random_tensor(Shape{3, 64}, 8);
  EXPECT_LE(max_rel(tt_forward(l, x), dense_oracle(l, x)), 1e-6);
}

TEST(TTForward, OracleOnRandomConfigs) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<Index> dim(1, 4), order(1, 4), rank(1, 4), batch(1, 4);
  for (int t = 0; t < 25; ++t) {
    const Index k = order(rng);
    std::vector<Index> in(k), out(k), ranks(k + 1, 1);
    for (Index i = 0; i < k; ++i) {
      in[i] = dim(rng);
      out[i] = dim(rng);
    }
    for (Index i = 1; i < k; ++i) ranks[i] = rank(rng);
    const Activation act = t % 2 ? Activation::relu : Activation::identity;
    const TTLinearLayer l = random_layer(Shape(in), Shape(out), RankVector(ranks), t, act);
    const DenseTensor x = random_tensor(Shape{batch(rng), Shape(in).numel()}, t + 50);
    EXPECT_LE(max_rel(tt_forward(l, x), dense_oracle(l, x)), 1e-10) << "config " << t;
  }
}

TEST(TTForward, Linearity) {
  const TTLinearLayer l = random_layer(Shape{2, 3, 2}, Shape{3, 2, 2}, RankVector{1, 3, 2, 1}, 9);
  const DenseTensor x = random_tensor(Shape{2, 12}, 1), y = random_tensor(Shape{2, 12}, 2);
  const double a = 0.7, b = -1.3;
  const DenseTensor lhs = tt_forward(l, add(scale(x, a), scale(y, b)));
  const DenseTensor fx = tt_forward(l, x), fy = tt_forward(l, y);
  for (Index n = 0; n < 2; ++n)
    for (Index j = 0; j < 12; ++j) {
      const double rhs = a * fx.at({n, j}) + b * fy.at({n, j}) - (a + b - 1.0) * l.bias[j];
      EXPECT_NEAR(lhs.at({n, j}), rhs, 1e-9);
    }
}

TEST(TTForward, InputShapeErrors) {
  const TTLinearLayer l = random_layer(Shape{2, 2}, Shape{2, 2}, RankVector{1, 2, 1}, 1);
  EXPECT_THROW(tt_forward(l, DenseTensor(Shape{2, 5})), ShapeError);
}

TEST(TTBackward, ZeroCotangent) {
  const TTLinearLayer l = random_layer(Shape{2, 3}, Shape{2, 2}, RankVector{1, 2, 1}, 3);
  TTForwardCache cache;
  tt_forward(l, random_tensor(Shape{3, 6}, 1), &cache);
  const TTGradients g = tt_backward(l, cache, DenseTensor(Shape{3, 4}));
  for (const DenseTensor& c : g.cores)
    for (double v : c.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.bias) EXPECT_EQ(v, 0.0);
  for (double v : g.input.data()) EXPECT_EQ(v, 0.0);
}

TEST(TTBackward, SingleCoreIsDenseLayer) {
  const TTLinearLayer l = random_layer(Shape{4}, Shape{3}, RankVector{1, 1}, 2);
  const DenseTensor x = random_tensor(Shape{1, 4}, 3);
  const DenseTensor go = random_tensor(Shape{1, 3}, 4);
  TTForwardCache cache;
  tt_forward(l, x, &cache);
  const TTGradients g = tt_backward(l, cache, go);
  const Matrix w = ttm_to_dense(l.weights);
  for (Index j = 0; j < 3; ++j)
    for (Index i = 0; i < 4; ++i) EXPECT_NEAR(g.cores[0].at({j, i, 0, 0}), go[j] * x[i], 1e-14);
  for (Index i = 0; i < 4; ++i) {
    double s = 0.0;
    for (Index j = 0; j < 3; ++j) s += w(j, i) * go[j];
    EXPECT_NEAR(g.input[i], s, 1e-14);
  }
}

TEST(TTBackward, FiniteDifferencesSmallLayer) {
  const TTLinearLayer l = random_layer(Shape{2, 2, 2}, Shape{2, 2, 2}, RankVector{1, 3, 3, 1}, 4);
  const FdResult r = finite_difference_check(l, random_tensor(Shape{2, 8}, 5), 6);
  EXPECT_LE(r.cores, 1e-4);
  EXPECT_LE(r.bias, 1e-4);
  EXPECT_LE(r.input, 1e-4);
}

TEST(TTBackward, FiniteDifferencesRandomConfigs) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<Index> dim(1, 3), order(2, 4), rank(1, 3);
  for (int t = 0; t < 20; ++t) {
    const Index k = order(rng);
    std::vector<Index> in(k), out(k), ranks(k + 1, 1);
    for (Index i = 0; i < k; ++i) {
      in[i] = dim(rng);
      out[i] = dim(rng);
    }
    for (Index i = 1; i < k; ++i) ranks[i] = rank(rng);
    const Activation act = t % 2 ? Activation::relu : Activation::identity;
    const TTLinearLayer l = random_layer(Shape(in), Shape(out), RankVector(ranks), t, act);
    const FdResult r = finite_difference_check(l, random_tensor(Shape{3, Shape(in).numel()}, t + 9), t + 99);
    EXPECT_LE(std::max({r.cores, r.bias, r.input}), 1e-4) << "config " << t;
  }
}

TEST(TTBackward, EmptyCacheIsStateError) {
  const TTLinearLayer l = random_layer(Shape{2, 2}, Shape{2, 2}, RankVector{1, 2, 1}, 1);
  EXPECT_THROW(tt_backward(l, TTForwardCache{}, DenseTensor(Shape{1, 4})), StateError);
}

TEST(TTLayerRandom, Deterministic) {
  const TTLinearLayer a = tt_layer_random(Shape{4, 4}, Shape{4, 4}, RankVector{1, 3, 1}, 42);
  const TTLinearLayer b = tt_layer_random(Shape{4, 4}, Shape{4, 4}, RankVector{1, 3, 1}, 42);
  for (Index k = 0; k < 2; ++k) EXPECT_EQ(a.weights.cores[k].storage(), b.weights.cores[k].storage());
}

TEST(TTLayerRandom, WeightVarianceNearFanIn) {
  double sum = 0.0, sq = 0.0;
  Index n = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TTLinearLayer l = tt_layer_random(Shape{4, 4, 2, 2}, Shape{4, 4, 2, 2}, RankVector::uniform(4, 8), seed);
    const Matrix w = ttm_to_dense(l.weights);
    for (double v : w.data()) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_GT(var, 1.0 / 64.0 / 3.0);
  EXPECT_LT(var, 3.0 / 64.0);
}

TEST(TTLayerRandom, UnitRanksAreSeparable) {
  const TTLinearLayer l = tt_layer_random(Shape{2, 3, 2}, Shape{3, 2, 2}, RankVector{1, 1, 1, 1}, 5);
  const TTMatrix again =
      dense_to_ttm(ttm_to_dense(l.weights), Shape{2, 3, 2}, Shape{3, 2, 2}, RankVector::unbounded(3));
  EXPECT_EQ(again.ranks.values(), (std::vector<Index>{1, 1, 1, 1}));
}

TEST(TTLayerFromDense, IdentityWeight) {
  std::vector<double> bias(64, 0.25);
  const TTLinearLayer l = tt_layer_from_dense(Matrix::identity(64), bias, Shape{4, 4, 2, 2}, Shape{4, 4, 2, 2},
                                              RankVector::unbounded(4));
  const DenseTensor x = random_tensor(Shape{2, 64}, 1);
  const DenseTensor y = tt_forward(l, x);
  for (Index i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i] + 0.25, 1e-10);
}

TEST(TTLayerFromDense, ZeroMatrix) {
  const TTLinearLayer l = tt_layer_from_dense(Matrix(16, 16), std::vector<double>(16, 0.0), Shape{4, 4},
                                              Shape{4, 4}, RankVector::unbounded(2));
  for (const DenseTensor& c : l.weights.cores)
    for (double v : c.data()) EXPECT_EQ(v, 0.0);
}

TEST(TTLayerFromDense, TruncationErrorIsBounded) {
  const Matrix w = random_matrix(128, 64, 3);
  const std::vector<double> bias(128, 0.0);
  const TTLinearLayer l =
      tt_layer_from_dense(w, bias, Shape{4, 4, 2, 2}, Shape{4, 4, 4, 2}, RankVector::uniform(4, 4));
  EXPECT_EQ(l.weights.ranks.max_interior(), 4u);
  const DenseTensor x = random_tensor(Shape{4, 64}, 4);
  const Matrix ref = matmul_nt(as_matrix(x, 4, 64), w);
  const DenseTensor y = tt_forward(l, x);
  const double err = frobenius_norm(subtract(y, as_tensor(ref)));
  // projection onto a subspace cannot add energy
  const double w_err = frobenius_norm(subtract(w, ttm_to_dense(l.weights)));
  EXPECT_GT(err, 0.0);
  EXPECT_LE(w_err, frobenius_norm(w));
  EXPECT_LE(err, w_err * frobenius_norm(x) + 1e-12);
}

TEST(TTLayerParamCount, Contract) {
  const TTLinearLayer l = tt_layer_random(Shape{4, 4, 4, 4}, Shape{8, 4, 4, 4}, RankVector{1, 4, 4, 4, 1}, 1);
  EXPECT_EQ(tt_layer_param_count(l), 704u + 512u);
}
