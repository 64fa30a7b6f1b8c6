#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cfloat>
#include <cmath>

#include "ttk/error.hpp"
#include "ttk/tensor.hpp"

namespace ttk {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajorMatrix> view(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

Matrix leading_columns(const Eigen::MatrixXd& src, Index rows, Index r) {
  Matrix out(rows, r);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < r; ++j)
      out(i, j) = src(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

Index numerical_rank(const std::vector<double>& s, Index rows, Index cols, double eps) {
  if (s.empty() || s.front() == 0.0) return 1;
  const double floor = static_cast<double>(std::max(rows, cols)) * DBL_EPSILON * s.front();
  Index kept = 0;
  while (kept < s.size() && s[kept] > floor) ++kept;
  kept = std::max<Index>(kept, 1);

  double total_sq = 0.0;
  for (double x : s) total_sq += x * x;
  const double budget = eps * std::sqrt(total_sq);

  // tail_sq[r] = sum of s_i^2 for kept-range i >= r
  std::vector<double> tail_sq(kept + 1, 0.0);
  for (Index i = kept; i-- > 0;) tail_sq[i] = tail_sq[i + 1] + s[i] * s[i];
  for (Index r = 1; r <= kept; ++r) {
    if (std::sqrt(tail_sq[r]) <= budget) return r;
  }
  return kept;
}

}  // namespace

SvdResult truncated_svd(const Matrix& m, Index max_rank, double eps) {
  if (max_rank < 1) throw ShapeError("truncated_svd: max_rank must be >= 1");
  if (eps < 0.0 || !std::isfinite(eps)) throw NumericError("truncated_svd: eps must be finite and >= 0");
  if (m.rows() == 0 || m.cols() == 0) throw ShapeError("truncated_svd: empty matrix");
  if (!all_finite(m.data())) throw NumericError("truncated_svd: non-finite input");

  Eigen::MatrixXd a = view(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  std::vector<double> s(sv.data(), sv.data() + sv.size());

  const Index r = std::min(max_rank, numerical_rank(s, m.rows(), m.cols(), eps));

  SvdResult out;
  out.rank = r;
  out.s.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(r));
  out.u = leading_columns(svd.matrixU(), m.rows(), r);
  out.v = leading_columns(svd.matrixV(), m.cols(), r);
  return out;
}

QrResult thin_qr(const Matrix& m) {
  if (!all_finite(m.data())) throw NumericError("thin_qr: non-finite input");
  Eigen::MatrixXd a = view(m);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Index k = std::min(m.rows(), m.cols());
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), static_cast<Eigen::Index>(k));
  Eigen::MatrixXd r = qr.matrixQR().topRows(static_cast<Eigen::Index>(k)).triangularView<Eigen::Upper>();

  QrResult out;
  out.q = leading_columns(q, m.rows(), k);
  out.r = leading_columns(r, k, m.cols());
  return out;
}

}  // namespace ttk
