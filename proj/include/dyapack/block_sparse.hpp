#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "dyapack/errors.hpp"
#include "dyapack/flops.hpp"
#include "dyapack/pyramid.hpp"

namespace dyapack {

// Generic block-sparse matrix over an explicit pattern.  Blocks are dense
// k x k and stored in the pattern's lexicographic order.  This is the
// workhorse behind the level sweep of the factorization, where every
// intermediate has a known pattern.
template <class Scalar>
class block_sparse_matrix {
 public:
  using block_type = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  block_sparse_matrix() = default;

  explicit block_sparse_matrix(block_sparsity_pattern pattern)
      : pattern_(std::move(pattern)),
        blocks_(pattern_.size(),
                block_type::Zero(pattern_.k(), pattern_.k())) {}

  const block_sparsity_pattern& pattern() const { return pattern_; }
  int k() const { return pattern_.k(); }

  block_type& block_at(std::size_t slot) { return blocks_[slot]; }
  const block_type& block_at(std::size_t slot) const { return blocks_[slot]; }

  block_type& block(index_t i, index_t j) {
    auto s = pattern_.find(i, j);
    if (!s)
      fail(errc::pattern_violation,
           "block (" + std::to_string(i) + ", " + std::to_string(j) +
               ") is outside the pattern");
    return blocks_[*s];
  }
  const block_type& block(index_t i, index_t j) const {
    return const_cast<block_sparse_matrix*>(this)->block(i, j);
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
    const int k = pattern_.k();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(
            pattern_.block_rows() * k, pattern_.block_cols() * k);
    const auto& coords = pattern_.index_set();
    for (std::size_t s = 0; s < coords.size(); ++s)
      out.block((coords[s].first - 1) * k, (coords[s].second - 1) * k, k, k) =
          blocks_[s];
    return out;
  }

  block_sparse_matrix transposed() const {
    block_sparse_matrix out(pattern_.transposed());
    const auto& coords = pattern_.index_set();
    for (std::size_t s = 0; s < coords.size(); ++s)
      out.block(coords[s].second, coords[s].first) = blocks_[s].transpose();
    return out;
  }

 private:
  block_sparsity_pattern pattern_;
  std::vector<block_type> blocks_;
};

// C = A * B restricted to result_pattern.  For every admissible (i, j) the
// contributing inner indices are visited in ascending order (merge of A's row
// i with B's column j), so the floating point result is reproducible.
template <class Scalar>
block_sparse_matrix<Scalar> multiply_patterned(
    const block_sparse_matrix<Scalar>& a, const block_sparse_matrix<Scalar>& b,
    block_sparsity_pattern result_pattern, flop_counter* fc = nullptr) {
  if (a.pattern().block_cols() != b.pattern().block_rows())
    fail(errc::dimension_mismatch, "inner block dimensions differ");
  if (a.k() != b.k() || a.k() != result_pattern.k())
    fail(errc::dimension_mismatch, "block breadths differ");
  if (result_pattern.block_rows() != a.pattern().block_rows() ||
      result_pattern.block_cols() != b.pattern().block_cols())
    fail(errc::dimension_mismatch, "result pattern has the wrong shape");

  const int k = a.k();
  block_sparse_matrix<Scalar> out(std::move(result_pattern));
  const auto& coords = out.pattern().index_set();
  for (std::size_t s = 0; s < coords.size(); ++s) {
    const auto [i, j] = coords[s];
    const auto& ra = a.pattern().row_entries(i);
    const auto& cb = b.pattern().col_entries(j);
    auto& acc = out.block_at(s);
    bool first = true;
    std::size_t pa = 0, pb = 0;
    while (pa < ra.size() && pb < cb.size()) {
      if (ra[pa].first < cb[pb].first) {
        ++pa;
      } else if (cb[pb].first < ra[pa].first) {
        ++pb;
      } else {
        const auto& lhs = a.block_at(ra[pa].second);
        const auto& rhs = b.block_at(cb[pb].second);
        if (first) {
          acc.noalias() = lhs * rhs;
          first = false;
        } else {
          acc.noalias() += lhs * rhs;
          if (fc) fc->block_add(k);
        }
        if (fc) fc->block_multiply(k);
        ++pa;
        ++pb;
      }
    }
  }
  return out;
}

// diag(E^T E): one diagonal block per column of E, accumulated over the
// column's stored blocks in ascending row order
template <class Scalar>
block_sparse_matrix<Scalar> gram_elongated(const block_sparse_matrix<Scalar>& e,
                                           flop_counter* fc = nullptr) {
  const int k = e.k();
  const index_t cols = e.pattern().block_cols();
  std::vector<std::pair<index_t, index_t>> coords;
  coords.reserve(static_cast<std::size_t>(cols));
  for (index_t j = 1; j <= cols; ++j) coords.emplace_back(j, j);
  block_sparse_matrix<Scalar> out(
      block_sparsity_pattern(std::move(coords), cols, cols, k));
  for (index_t j = 1; j <= cols; ++j) {
    auto& acc = out.block(j, j);
    bool first = true;
    for (const auto& [i, slot] : e.pattern().col_entries(j)) {
      (void)i;
      const auto& blk = e.block_at(slot);
      if (first) {
        acc.noalias() = blk.transpose() * blk;
        first = false;
      } else {
        acc.noalias() += blk.transpose() * blk;
        if (fc) fc->block_add(k);
      }
      if (fc) fc->block_multiply(k);
    }
  }
  return out;
}

// E * D for block-diagonal D: scales each column of E by its diagonal block
template <class Scalar>
block_sparse_matrix<Scalar> scale_columns_by_diag(
    const block_sparse_matrix<Scalar>& e, const block_sparse_matrix<Scalar>& d,
    flop_counter* fc = nullptr) {
  if (e.pattern().block_cols() != d.pattern().block_rows() ||
      d.pattern().block_rows() != d.pattern().block_cols())
    fail(errc::dimension_mismatch, "diagonal operand has the wrong shape");
  for (const auto& [i, j] : d.pattern().index_set())
    if (i != j)
      fail(errc::pattern_violation, "scaling operand is not block diagonal");
  const int k = e.k();
  block_sparse_matrix<Scalar> out(e.pattern());
  const auto& coords = e.pattern().index_set();
  for (std::size_t s = 0; s < coords.size(); ++s) {
    out.block_at(s).noalias() = e.block_at(s) * d.block(coords[s].second,
                                                        coords[s].second);
    if (fc) fc->block_multiply(k);
  }
  return out;
}

}  // namespace dyapack
