#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ttk/tensor.hpp"

namespace ttk {

// TT-ranks R_0..R_K with R_0 = R_K = 1.
class RankVector {
 public:
  static constexpr Index kUnbounded = std::numeric_limits<Index>::max();

  RankVector() = default;
  RankVector(std::initializer_list<Index> ranks);
  explicit RankVector(std::vector<Index> ranks);

  // (1, r, ..., r, 1) for a train with `cores` cores.
  static RankVector uniform(Index cores, Index r);
  // Interior ranks unbounded; used as a "no cap" request for tt_svd.
  static RankVector unbounded(Index cores);

  Index cores() const { return ranks_.size() - 1; }
  Index operator[](Index k) const { return ranks_[k]; }
  const std::vector<Index>& values() const { return ranks_; }
  Index max_interior() const;

  friend bool operator==(const RankVector&, const RankVector&) = default;

 private:
  std::vector<Index> ranks_;
};

// Order-K tensor as K order-3 cores; core k has shape (I_k, R_{k-1}, R_k).
struct TTVector {
  std::vector<DenseTensor> cores;
  RankVector ranks;
  Shape mode_dims;

  // Throws ShapeError if any core disagrees with ranks/mode_dims.
  void validate() const;
  Index order() const { return cores.size(); }
};

// Weight matrix of size prod(J) × prod(I) as K order-4 cores; core k has
// shape (J_k, I_k, R_{k-1}, R_k). Row index linearizes (j_1..j_K) and
// column index linearizes (i_1..i_K), both row-major.
struct TTMatrix {
  std::vector<DenseTensor> cores;
  RankVector ranks;
  Shape in_dims;
  Shape out_dims;

  void validate() const;
  Index order() const { return cores.size(); }
  Index rows() const { return out_dims.numel(); }
  Index cols() const { return in_dims.numel(); }
};

double tt_element(const TTVector& v, std::span<const Index> idx);
DenseTensor tt_to_dense(const TTVector& v);

// Left-to-right sequential truncated SVD. Each step truncates with the
// relative tolerance of truncated_svd, so the overall relative error is at
// most sqrt(K-1)*eps when no rank cap binds.
TTVector tt_svd(const DenseTensor& t, const RankVector& max_ranks, double eps);

double ttm_element(const TTMatrix& m, std::span<const Index> out_idx, std::span<const Index> in_idx);
Matrix ttm_to_dense(const TTMatrix& m);

// Tensorizes w with merged modes m_k = j_k * I_k + i_k, decomposes with
// tt_svd and splits each core back into (J_k, I_k, R_{k-1}, R_k).
TTMatrix dense_to_ttm(const Matrix& w, const Shape& in_dims, const Shape& out_dims,
                      const RankVector& max_ranks, double eps = 0.0);

// sum_k J_k * I_k * R_{k-1} * R_k
Index tt_param_count(const TTMatrix& m);
Index tt_param_count(const Shape& in_dims, const Shape& out_dims, const RankVector& ranks);
Index dense_param_count(Index rows, Index cols);

// View a TT-matrix as a TT-vector over merged modes (metadata-only).
TTVector merged_modes(const TTMatrix& m);

}  // namespace ttk
