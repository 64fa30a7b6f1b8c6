#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "ttk/error.hpp"
#include "ttk/tucker.hpp"

using namespace ttk;
using ttk::testing::dot;
using ttk::testing::numeric_gradient;
using ttk::testing::random_matrix;
using ttk::testing::random_tensor;
using ttk::testing::rel_error;

namespace {

double rel_frob(const Matrix& a, const Matrix& b) { return frobenius_norm(subtract(a, b)) / frobenius_norm(a); }

double orthonormality_defect(const Matrix& q) {
  const Matrix g = matmul_tn(q, q);
  return max_abs_diff(g.data(), Matrix::identity(g.rows()).data());
}

// sqrt of the squared singular values of the mode-k unfolding beyond rank r
double mode_tail(const DenseTensor& t, Index mode, Index r) {
  const SvdResult s = truncated_svd(mode_unfold(t, mode), t.dim(mode), 0.0);
  double tail = 0.0;
  for (Index k = r; k < s.s.size(); ++k) tail += s.s[k] * s.s[k];
  return std::sqrt(tail);
}

}  // namespace

TEST(ModeProduct, AgainstLoops) {
  const DenseTensor t = random_tensor(Shape{2, 3, 4}, 1);
  const Matrix m = random_matrix(5, 3, 2);
  const DenseTensor p = mode_product(t, m, 1);
  ASSERT_EQ(p.shape(), (Shape{2, 5, 4}));
  for (Index a = 0; a < 2; ++a)
    for (Index j = 0; j < 5; ++j)
      for (Index c = 0; c < 4; ++c) {
        double s = 0.0;
        for (Index b = 0; b < 3; ++b) s += m(j, b) * t.at({a, b, c});
        EXPECT_NEAR(p.at({a, j, c}), s, 1e-14);
      }
  EXPECT_THROW(mode_product(t, m, 0), ShapeError);
  EXPECT_THROW(mode_product(t, m, 3), ShapeError);
}

TEST(ModeUnfold, Layout) {
  const DenseTensor t = random_tensor(Shape{2, 3, 4}, 3);
  const Matrix u = mode_unfold(t, 1);
  ASSERT_EQ(u.rows(), 3u);
  ASSERT_EQ(u.cols(), 8u);
  for (Index a = 0; a < 2; ++a)
    for (Index b = 0; b < 3; ++b)
      for (Index c = 0; c < 4; ++c) EXPECT_EQ(u(b, a * 4 + c), t.at({a, b, c}));
}

TEST(Hosvd, IdentityFullRank) {
  const Matrix w = Matrix::identity(16);
  const TuckerMatrix t = hosvd(w, Shape{4, 4}, Shape{4, 4}, {4, 4, 4, 4});
  EXPECT_LE(rel_frob(w, tucker_reconstruct(t)), 1e-10);
  for (const Matrix& f : t.factors) EXPECT_LE(orthonormality_defect(f), 1e-10);
}

TEST(Hosvd, FullRankRandomRoundTrips) {
  const std::vector<std::pair<Shape, Shape>> cases{{Shape{8, 8}, Shape{8, 8}},
                                                   {Shape{2, 3}, Shape{5, 2}},
                                                   {Shape{16, 16}, Shape{16, 32}},
                                                   {Shape{16, 8}, Shape{16, 8}}};
  std::uint64_t seed = 1;
  for (const auto& [in, out] : cases) {
    const Matrix w = random_matrix(out.numel(), in.numel(), seed++);
    const TuckerMatrix t = hosvd(w, in, out, {out[0], out[1], in[0], in[1]});
    EXPECT_LE(rel_frob(w, tucker_reconstruct(t)), 1e-10) << in.to_string() << " " << out.to_string();
    for (const Matrix& f : t.factors) EXPECT_LE(orthonormality_defect(f), 1e-10);
  }
}

TEST(Hosvd, SeparableNeedsUnitRanks) {
  const Matrix a = random_matrix(3, 1, 1), b = random_matrix(2, 1, 2), c = random_matrix(4, 1, 3),
               d = random_matrix(2, 1, 4);
  Matrix w(6, 8);
  for (Index j1 = 0; j1 < 3; ++j1)
    for (Index j2 = 0; j2 < 2; ++j2)
      for (Index i1 = 0; i1 < 4; ++i1)
        for (Index i2 = 0; i2 < 2; ++i2) w(j1 * 2 + j2, i1 * 2 + i2) = a(j1, 0) * b(j2, 0) * c(i1, 0) * d(i2, 0);
  const TuckerMatrix t = hosvd(w, Shape{4, 2}, Shape{3, 2}, {1, 1, 1, 1});
  EXPECT_LE(rel_frob(w, tucker_reconstruct(t)), 1e-12);
}

TEST(Hosvd, ErrorAgainstModeTails) {
  const Matrix w = random_matrix(64, 64, 5);
  const TuckerMatrix t = hosvd(w, Shape{8, 8}, Shape{8, 8}, {4, 4, 4, 4});
  const double err = frobenius_norm(subtract(w, tucker_reconstruct(t)));
  const DenseTensor view = reshape(as_tensor(w), Shape{8, 8, 8, 8});
  double bound = 0.0, largest = 0.0;
  for (Index k = 0; k < 4; ++k) {
    const double tail = mode_tail(view, k, 4);
    bound += tail * tail;
    largest = std::max(largest, tail);
  }
  bound = std::sqrt(bound);
  EXPECT_LE(err, bound * (1.0 + 1e-12));
  EXPECT_GE(err, largest * (1.0 - 1e-12));
}

TEST(Hosvd, MonotoneInEachRank) {
  const Matrix w = random_matrix(32, 16, 6);
  const Shape in{4, 4}, out{8, 4};
  const TuckerRanks full{8, 4, 4, 4};
  for (Index mode = 0; mode < 4; ++mode) {
    double previous = std::numeric_limits<double>::infinity();
    for (Index r = 1; r <= full[mode]; ++r) {
      TuckerRanks ranks{3, 3, 3, 3};
      ranks[mode] = r;
      const double err = rel_frob(w, tucker_reconstruct(hosvd(w, in, out, ranks)));
      EXPECT_LE(err, previous + 1e-12) << "mode " << mode << " rank " << r;
      previous = err;
    }
  }
}

TEST(Hosvd, RankErrors) {
  const Matrix w = random_matrix(16, 16, 1);
  EXPECT_THROW(hosvd(w, Shape{4, 4}, Shape{4, 4}, {5, 4, 4, 4}), ShapeError);
  EXPECT_THROW(hosvd(w, Shape{4, 4}, Shape{4, 4}, {0, 4, 4, 4}), ShapeError);
  EXPECT_THROW(hosvd(w, Shape{2, 4}, Shape{4, 4}, {1, 1, 1, 1}), ShapeError);
}

TEST(TuckerReconstruct, ZeroCore) {
  TuckerMatrix t = hosvd(random_matrix(16, 16, 2), Shape{4, 4}, Shape{4, 4}, {2, 2, 2, 2});
  t.core.fill(0.0);
  const Matrix w = tucker_reconstruct(t);
  for (double v : w.data()) EXPECT_EQ(v, 0.0);
}

TEST(TuckerReconstruct, QuadrupleLoop) {
  TuckerMatrix t;
  t.in_dims = Shape{2, 2};
  t.out_dims = Shape{2, 2};
  t.core = random_tensor(Shape{2, 2, 2, 2}, 4);
  for (Index k = 0; k < 4; ++k) t.factors[k] = random_matrix(2, 2, 10 + k);
  const Matrix w = tucker_reconstruct(t);
  for (Index j1 = 0; j1 < 2; ++j1)
    for (Index j2 = 0; j2 < 2; ++j2)
      for (Index i1 = 0; i1 < 2; ++i1)
        for (Index i2 = 0; i2 < 2; ++i2) {
          double s = 0.0;
          for (Index a = 0; a < 2; ++a)
            for (Index b = 0; b < 2; ++b)
              for (Index c = 0; c < 2; ++c)
                for (Index d = 0; d < 2; ++d)
                  s += t.core.at({a, b, c, d}) * t.factors[0](j1, a) * t.factors[1](j2, b) * t.factors[2](i1, c) *
                       t.factors[3](i2, d);
          EXPECT_NEAR(w(j1 * 2 + j2, i1 * 2 + i2), s, 1e-14);
        }
}

TEST(TuckerParamCount, Examples) {
  // 8*4*4*4 core + (64 + 16 + 16 + 16) factor entries
  EXPECT_EQ(tucker_param_count(Shape{8, 4, 4, 4}, {8, 4, 4, 4}), 624u);
  EXPECT_EQ(tucker_param_count(Shape{8, 4, 4, 4}, {1, 1, 1, 1}), 1u + 20u);
  const TuckerMatrix t = hosvd(random_matrix(32, 16, 1), Shape{4, 4}, Shape{8, 4}, {3, 2, 4, 1});
  EXPECT_EQ(tucker_param_count(t), 3u * 2 * 4 * 1 + 8 * 3 + 4 * 2 + 4 * 4 + 4 * 1);
}

TEST(TuckerRandom, OrthonormalAndDeterministic) {
  const TuckerMatrix a = tucker_random(Shape{4, 4}, Shape{8, 4}, {3, 3, 3, 3}, 9);
  const TuckerMatrix b = tucker_random(Shape{4, 4}, Shape{8, 4}, {3, 3, 3, 3}, 9);
  EXPECT_EQ(a.core.storage(), b.core.storage());
  for (const Matrix& f : a.factors) EXPECT_LE(orthonormality_defect(f), 1e-12);
}

TEST(TuckerLayer, FullRankMatchesDense) {
  const Matrix w = random_matrix(32, 16, 3);
  TuckerLinearLayer l;
  l.weights = hosvd(w, Shape{4, 4}, Shape{8, 4}, {8, 4, 4, 4});
  l.bias.assign(32, 0.5);
  const DenseTensor x = random_tensor(Shape{3, 16}, 4);
  const DenseTensor y = tucker_layer_forward(l, x);
  const Matrix ref = matmul_nt(as_matrix(x, 3, 16), w);
  for (Index b = 0; b < 3; ++b)
    for (Index j = 0; j < 32; ++j) EXPECT_NEAR(y.at({b, j}), ref(b, j) + 0.5, 1e-9);
}

TEST(TuckerLayer, ZeroCoreGivesBias) {
  TuckerLinearLayer l;
  l.weights = tucker_random(Shape{4, 4}, Shape{4, 4}, {2, 2, 2, 2}, 1);
  l.weights.core.fill(0.0);
  l.bias.assign(16, -1.5);
  const DenseTensor y = tucker_layer_forward(l, random_tensor(Shape{2, 16}, 2));
  for (double v : y.data()) EXPECT_EQ(v, -1.5);
}

TEST(TuckerLayer, FiniteDifferences) {
  TuckerLinearLayer l;
  l.weights = tucker_random(Shape{4, 4}, Shape{4, 4}, {3, 2, 3, 2}, 5);
  l.bias.assign(16, 0.1);
  DenseTensor x = random_tensor(Shape{2, 16}, 6);
  TuckerForwardCache cache;
  const DenseTensor y = tucker_layer_forward(l, x, &cache);
  const DenseTensor probe = random_tensor(y.shape(), 7);
  const TuckerGradients g = tucker_layer_backward(l, cache, probe);
  const auto loss = [&] { return dot(tucker_layer_forward(l, x).data(), probe.data()); };
  EXPECT_LE(rel_error(g.core.data(), numeric_gradient(l.weights.core.data(), loss, 1e-5)), 1e-4);
  for (Index k = 0; k < 4; ++k) {
    EXPECT_LE(rel_error(g.factors[k].data(), numeric_gradient(l.weights.factors[k].data(), loss, 1e-5)), 1e-4)
        << "factor " << k;
  }
  EXPECT_LE(rel_error(g.bias, numeric_gradient(l.bias, loss, 1e-5)), 1e-4);
  EXPECT_LE(rel_error(g.input.data(), numeric_gradient(x.data(), loss, 1e-5)), 1e-4);
  EXPECT_THROW(tucker_layer_backward(l, TuckerForwardCache{}, probe), StateError);
}
