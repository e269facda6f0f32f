#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyapack/errors.hpp"
#include "dyapack/flops.hpp"
#include "dyapack/parallel.hpp"
#include "dyapack/pyramid.hpp"

namespace dyapack {

namespace tol {
// absolute threshold below which a value counts as structurally zero
inline constexpr double zero = 1e-14;
// numerical agreement of two ways of computing the same quantity
inline constexpr double numeric = 1e-12;
}  // namespace tol

// Dense k x k blocks on a dyadic pattern of height N.  Blocks are stored
// level-major: level 1 positions first, then level 2, ...; inside a position
// the vertical arm (window rows, ascending, diagonal included) precedes the
// horizontal arm (window columns, ascending, diagonal skipped).
template <class Scalar>
class dyadic_matrix {
 public:
  using block_type = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using dense_type = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit dyadic_matrix(dyadic_pattern pattern) : pat_(pattern) {
    validate(pat_);
    level_start_.assign(static_cast<std::size_t>(pat_.N) + 2, 0);
    for (int l = 1; l <= pat_.N; ++l) {
      const index_t positions = index_t{1} << (pat_.N - l);
      level_start_[static_cast<std::size_t>(l) + 1] =
          level_start_[static_cast<std::size_t>(l)] +
          positions * group_size(l);
    }
    blocks_.assign(
        static_cast<std::size_t>(level_start_[static_cast<std::size_t>(pat_.N) + 1]),
        block_type::Zero(pat_.k, pat_.k));
  }

  int height() const { return pat_.N; }
  int breadth() const { return pat_.k; }
  dyadic_kind kind() const { return pat_.kind; }
  const dyadic_pattern& pattern() const { return pat_; }

  index_t block_dim() const { return (index_t{1} << pat_.N) - 1; }
  index_t dim() const { return block_dim() * pat_.k; }
  std::size_t stored_blocks() const { return blocks_.size(); }

  bool in_pattern(index_t i, index_t j) const { return slot(i, j).has_value(); }

  block_type& block(index_t i, index_t j) {
    auto s = slot(i, j);
    if (!s)
      fail(errc::pattern_violation,
           "block (" + std::to_string(i) + ", " + std::to_string(j) +
               ") is outside the " + std::string(kind_name(pat_.kind)) +
               " pattern");
    return blocks_[*s];
  }
  const block_type& block(index_t i, index_t j) const {
    return const_cast<dyadic_matrix*>(this)->block(i, j);
  }

  // calls f(i, j, block) over stored blocks in storage order
  template <class F>
  void for_each_block(F&& f) const {
    visit_coords([&](index_t i, index_t j, std::size_t s) { f(i, j, blocks_[s]); });
  }
  template <class F>
  void for_each_block(F&& f) {
    visit_coords([&](index_t i, index_t j, std::size_t s) { f(i, j, blocks_[s]); });
  }

  dense_type to_dense() const {
    const int k = pat_.k;
    dense_type out = dense_type::Zero(dim(), dim());
    for_each_block([&](index_t i, index_t j, const block_type& b) {
      out.block((i - 1) * k, (j - 1) * k, k, k) = b;
    });
    return out;
  }

  // indices the stored row i couples to, ascending (split into "window of i"
  // and "positions whose window holds i" according to the kind)
  std::vector<index_t> row_support(index_t i) const {
    std::vector<index_t> out;
    const int li = index_level(i);
    if (pat_.kind != dyadic_kind::vertical) {
      const index_t half = (index_t{1} << (li - 1)) - 1;
      for (index_t c = i - half; c <= i + half; ++c) out.push_back(c);
    }
    if (pat_.kind != dyadic_kind::horizontal) {
      for (int L = li; L <= pat_.N; ++L) out.push_back(ancestor_at_level(i, L));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  index_t group_size(int l) const {
    const index_t w = (index_t{1} << l) - 1;  // window size incl. the position
    return pat_.kind == dyadic_kind::symmetric ? 2 * w - 1 : w;
  }

  template <class F>
  void visit_coords(F&& f) const {
    std::size_t s = 0;
    for (int l = 1; l <= pat_.N; ++l) {
      const index_t positions = index_t{1} << (pat_.N - l);
      const index_t half = (index_t{1} << (l - 1)) - 1;
      for (index_t r = 1; r <= positions; ++r) {
        const index_t p = position_index(static_cast<int>(r), l);
        if (pat_.kind == dyadic_kind::horizontal) {
          for (index_t j = p - half; j <= p + half; ++j) f(p, j, s++);
          continue;
        }
        for (index_t i = p - half; i <= p + half; ++i) f(i, p, s++);
        if (pat_.kind == dyadic_kind::symmetric)
          for (index_t j = p - half; j <= p + half; ++j) {
            if (j == p) continue;
            f(p, j, s++);
          }
      }
    }
  }

  std::optional<std::size_t> slot(index_t i, index_t j) const {
    const index_t top = block_dim();
    if (i < 1 || i > top || j < 1 || j > top) return std::nullopt;
    const int li = index_level(i);
    const int lj = index_level(j);
    if (pat_.kind == dyadic_kind::horizontal) {
      // row i must be a position whose window holds j
      if (li >= lj && ancestor_at_level(j, li) == i) {
        const index_t half = (index_t{1} << (li - 1)) - 1;
        return group_start(i, li) + static_cast<std::size_t>(j - (i - half));
      }
      return std::nullopt;
    }
    // vertical arm: j is a position and i lies inside its window (covers the
    // diagonal, since li == lj forces i == j here)
    if (lj >= li && ancestor_at_level(i, lj) == j) {
      const index_t half = (index_t{1} << (lj - 1)) - 1;
      return group_start(j, lj) + static_cast<std::size_t>(i - (j - half));
    }
    // symmetric kind also stores the mirrored arm, diagonal skipped
    if (pat_.kind == dyadic_kind::symmetric && li > lj &&
        ancestor_at_level(j, li) == i) {
      const index_t half = (index_t{1} << (li - 1)) - 1;
      std::size_t idx = static_cast<std::size_t>(j - (i - half));
      if (j > i) --idx;
      return group_start(i, li) + static_cast<std::size_t>(2 * half + 1) + idx;
    }
    return std::nullopt;
  }

  std::size_t group_start(index_t pos, int l) const {
    const index_t r = ((pos - 1) >> l) + 1;  // rank of the position in level l
    return static_cast<std::size_t>(level_start_[static_cast<std::size_t>(l)] +
                                    (r - 1) * group_size(l));
  }

  dyadic_pattern pat_;
  std::vector<block_type> blocks_;
  std::vector<index_t> level_start_;
};

namespace detail {
template <class Scalar>
std::string block_name(index_t i, index_t j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}
}  // namespace detail

// Extracts the pattern blocks of a dense matrix and verifies that everything
// outside the pattern is zero up to tol_zero.
template <class Derived>
dyadic_matrix<typename Derived::Scalar> from_dense(
    const Eigen::MatrixBase<Derived>& m, const dyadic_pattern& pattern,
    double tol_zero = tol::zero) {
  using Scalar = typename Derived::Scalar;
  validate(pattern);
  dyadic_matrix<Scalar> out(pattern);
  if (m.rows() != out.dim() || m.cols() != out.dim())
    fail(errc::dimension_mismatch,
         "matrix is " + std::to_string(m.rows()) + " x " +
             std::to_string(m.cols()) + " but the pattern needs " +
             std::to_string(out.dim()));
  const int k = pattern.k;
  out.for_each_block([&](index_t i, index_t j,
                         typename dyadic_matrix<Scalar>::block_type& b) {
    b = m.block((i - 1) * k, (j - 1) * k, k, k);
  });
  const index_t bd = out.block_dim();
  for (index_t i = 1; i <= bd; ++i)
    for (index_t j = 1; j <= bd; ++j) {
      if (out.in_pattern(i, j)) continue;
      const double mag =
          m.block((i - 1) * k, (j - 1) * k, k, k).cwiseAbs().maxCoeff();
      if (mag > tol_zero)
        fail(errc::pattern_violation,
             "block " + detail::block_name<Scalar>(i, j) +
                 " lies outside the pattern but has magnitude " +
                 std::to_string(mag));
    }
  return out;
}

// A * T for a tall block matrix T (block rows match A's block dimension).
// Works for every kind; per block row the contributions are accumulated in
// ascending column order.
template <class Scalar, class Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> multiply_tall(
    const dyadic_matrix<Scalar>& a, const Eigen::MatrixBase<Derived>& t,
    flop_counter* fc = nullptr) {
  const int k = a.breadth();
  if (t.rows() != a.dim())
    fail(errc::dimension_mismatch, "tall operand has the wrong row count");
  if (t.cols() % k != 0)
    fail(errc::dimension_mismatch,
         "tall operand's width is not a multiple of the block breadth");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(t.rows(),
                                                                  t.cols());
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> tall = t;
  const index_t bd = a.block_dim();
  std::vector<flop_counter> counts(static_cast<std::size_t>(bd));
  parallel_for(static_cast<int>(bd), [&](int row0) {
    const index_t i = row0 + 1;
    flop_counter& local = counts[static_cast<std::size_t>(row0)];
    auto dst = out.block((i - 1) * k, 0, k, tall.cols());
    bool first = true;
    for (index_t j : a.row_support(i)) {
      const auto& blk = a.block(i, j);
      if (first) {
        dst.noalias() = blk * tall.block((j - 1) * k, 0, k, tall.cols());
        first = false;
      } else {
        dst.noalias() += blk * tall.block((j - 1) * k, 0, k, tall.cols());
        local.block_add(k);
      }
      local.block_multiply(k);
    }
  });
  if (fc)
    for (const auto& c : counts) *fc += c;
  return out;
}

// P * Q^T for two vertical-kind operands on the same pyramid: the sweep runs
// over positions in ascending natural order and rank-updates the dense
// result with each position's window outer product.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> product_with_transpose(
    const dyadic_matrix<Scalar>& p, const dyadic_matrix<Scalar>& q,
    flop_counter* fc = nullptr) {
  if (p.kind() != dyadic_kind::vertical || q.kind() != dyadic_kind::vertical)
    fail(errc::pattern_violation,
         "window-column product needs vertical-kind operands");
  if (p.height() != q.height() || p.breadth() != q.breadth())
    fail(errc::dimension_mismatch, "operands live on different pyramids");
  const int k = p.breadth();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(p.dim(),
                                                                  p.dim());
  const index_t bd = p.block_dim();
  for (index_t c = 1; c <= bd; ++c) {
    const int l = index_level(c);
    const index_t half = (index_t{1} << (l - 1)) - 1;
    for (index_t i = c - half; i <= c + half; ++i)
      for (index_t j = c - half; j <= c + half; ++j) {
        out.block((i - 1) * k, (j - 1) * k, k, k).noalias() +=
            p.block(i, c) * q.block(j, c).transpose();
        if (fc) {
          fc->block_multiply(k);
          fc->block_add(k);
        }
      }
  }
  return out;
}

// Symmetric-kind pattern of height N restricted to the even indices is the
// height N-1 pattern after renumbering m -> 2m.
template <class Scalar>
dyadic_matrix<Scalar> subsample(const dyadic_matrix<Scalar>& a) {
  if (a.kind() != dyadic_kind::symmetric)
    fail(errc::pattern_violation, "subsampling needs the symmetric kind");
  if (a.height() < 2)
    fail(errc::range_error, "height must be >= 2 to subsample");
  dyadic_matrix<Scalar> out(
      dyadic_pattern{a.height() - 1, a.breadth(), dyadic_kind::symmetric});
  out.for_each_block([&](index_t i, index_t j,
                         typename dyadic_matrix<Scalar>::block_type& b) {
    b = a.block(2 * i, 2 * j);
  });
  return out;
}

// Places a small dense matrix into the pyramid's scalar index space:
// placement[a] is the 1-based destination of source row a, strictly
// increasing.  Unplaced rows and columns become identity rows and columns, so
// the result stays symmetric positive definite whenever the input is.
template <class Derived>
dyadic_matrix<typename Derived::Scalar> embed_irregular(
    const Eigen::MatrixBase<Derived>& m, const std::vector<index_t>& placement,
    const dyadic_pattern& pattern, double tol_zero = tol::zero) {
  using Scalar = typename Derived::Scalar;
  validate(pattern);
  if (pattern.kind != dyadic_kind::symmetric)
    fail(errc::pattern_violation, "embedding needs the symmetric kind");
  if (m.rows() != m.cols())
    fail(errc::dimension_mismatch, "embedded matrix must be square");
  if (static_cast<index_t>(placement.size()) != m.rows())
    fail(errc::dimension_mismatch,
         "placement must name one destination per source row");
  const index_t d =
      ((index_t{1} << pattern.N) - 1) * static_cast<index_t>(pattern.k);
  for (std::size_t a = 0; a < placement.size(); ++a) {
    if (placement[a] < 1 || placement[a] > d)
      fail(errc::range_error, "placement destination out of range");
    if (a > 0 && placement[a] <= placement[a - 1])
      fail(errc::range_error, "placement must be strictly increasing");
  }
  using dense_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  dense_t full = dense_t::Identity(d, d);
  for (std::size_t a = 0; a < placement.size(); ++a)
    for (std::size_t b = 0; b < placement.size(); ++b)
      full(placement[a] - 1, placement[b] - 1) = m(a, b);
  return from_dense(full, pattern, tol_zero);
}

}  // namespace dyapack
