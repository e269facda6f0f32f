#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyapack/block_sparse.hpp"
#include "dyapack/dyadic_matrix.hpp"
#include "dyapack/errors.hpp"
#include "dyapack/flops.hpp"
#include "dyapack/parallel.hpp"
#include "dyapack/pyramid.hpp"

namespace dyapack {

namespace tol {
inline constexpr double orthogonality = 1e-8;  // ||P^T S P - I||_max
inline constexpr double inverse = 1e-6;        // ||P P^T - S^{-1}||_max
inline constexpr double solve = 1e-8;          // relative solve residual
// residual verification is skipped above this dimension
inline constexpr index_t residual_dim_cap = 4096;
}  // namespace tol

// Returns G (upper triangular, positive diagonal) with G^T S G = I for a
// symmetric positive definite block S.  This is the inverse transpose of the
// lower Cholesky factor, computed with explicitly counted scalar operations.
// `where` labels the pyramid position in the error message when S fails to
// be positive definite.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> local_orthonormalize(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& s,
    flop_counter* fc = nullptr,
    const std::optional<pyramid_coord>& where = std::nullopt) {
  using block_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (s.rows() != s.cols())
    fail(errc::dimension_mismatch, "block must be square");
  const int k = static_cast<int>(s.rows());
  block_t chol = block_t::Zero(k, k);
  std::uint64_t units = 0;
  for (int j = 0; j < k; ++j) {
    for (int m = 0; m < j; ++m) {
      Scalar acc = s(j, m);
      for (int t = 0; t < m; ++t) acc -= chol(j, t) * chol(m, t);
      chol(j, m) = acc / chol(m, m);
      units += static_cast<std::uint64_t>(m) + 1;
    }
    Scalar pivot = s(j, j);
    for (int t = 0; t < j; ++t) pivot -= chol(j, t) * chol(j, t);
    units += static_cast<std::uint64_t>(j) + 1;
    if (!(pivot > Scalar(0)) || !std::isfinite(static_cast<double>(pivot))) {
      std::string at = where ? " at position (" + std::to_string(where->r) +
                                   ", " + std::to_string(where->l) + ")"
                             : "";
      fail(errc::definiteness,
           "block" + at + " is not positive definite (pivot " +
               std::to_string(static_cast<double>(pivot)) + " in column " +
               std::to_string(j + 1) + ")");
    }
    chol(j, j) = std::sqrt(pivot);
  }
  // forward substitution for inv(chol); G is its transpose
  block_t inv = block_t::Zero(k, k);
  for (int c = 0; c < k; ++c) {
    inv(c, c) = Scalar(1) / chol(c, c);
    units += 1;
    for (int r = c + 1; r < k; ++r) {
      Scalar acc = Scalar(0);
      for (int m = c; m < r; ++m) acc -= chol(r, m) * inv(m, c);
      inv(r, c) = acc / chol(r, r);
      units += static_cast<std::uint64_t>(r - c) + 1;
    }
  }
  if (fc) fc->unit(units);
  return inv.transpose();
}

// True when every stored block with block-coordinate distance > 1 from the
// diagonal is zero up to tol_zero.
template <class Scalar>
bool is_block_tridiagonal(const dyadic_matrix<Scalar>& s,
                          double tol_zero = tol::zero) {
  bool ok = true;
  s.for_each_block([&](index_t i, index_t j,
                       const typename dyadic_matrix<Scalar>::block_type& b) {
    if (!ok) return;
    if (std::abs(i - j) <= 1) return;
    if (b.size() > 0 && b.cwiseAbs().maxCoeff() > tol_zero) ok = false;
  });
  return ok;
}

template <class Scalar>
struct level_snapshot {
  int level;
  // window strips of the input couplings feeding this level, rows compacted
  const block_sparse_matrix<Scalar>& coupling;
  // the same strips after projecting out the processed columns
  const block_sparse_matrix<Scalar>& projected;
  // per-position residual gramians (block diagonal)
  const block_sparse_matrix<Scalar>& gramians;
};

template <class Scalar>
struct factor_options {
  // use the two-row strip shortcut when the input is block tridiagonal
  bool fast_path = true;
  // compute ||P^T S P - I||_max when the dimension allows it
  bool want_residual = true;
  std::function<void(const level_snapshot<Scalar>&)> observer;
};

template <class Scalar>
struct factor_result {
  dyadic_matrix<Scalar> P;
  flop_counter flops;
  std::optional<double> residual;
  bool used_fast_path = false;
};

// Level-by-level construction of a vertical-kind P with P^T S P = I.  Column
// group l is orthogonalized against everything below it by projecting the
// window strips of S onto the already processed columns; the projected strips
// also yield the residual gramians whose local orthonormalizations become the
// new diagonal blocks.
template <class Scalar>
factor_result<Scalar> sequential_orthogonalize(
    const dyadic_matrix<Scalar>& sigma,
    const factor_options<Scalar>& opts = {}) {
  if (sigma.kind() != dyadic_kind::symmetric)
    fail(errc::pattern_violation, "input must be of the symmetric kind");
  const int N = sigma.height();
  const int k = sigma.breadth();

  factor_result<Scalar> result{
      dyadic_matrix<Scalar>(dyadic_pattern{N, k, dyadic_kind::vertical}),
      flop_counter{}, std::nullopt, false};
  dyadic_matrix<Scalar>& P = result.P;
  flop_counter& fc = result.flops;
  const bool fast = opts.fast_path && is_block_tridiagonal(sigma);
  result.used_fast_path = fast;

  // level 1: the diagonal blocks at odd indices are orthonormalized directly
  {
    const index_t count = index_t{1} << (N - 1);
    std::vector<flop_counter> counts(static_cast<std::size_t>(count));
    parallel_for(static_cast<int>(count), [&](int r0) {
      const index_t j = 2 * index_t{r0} + 1;
      P.block(j, j) = local_orthonormalize<Scalar>(
          sigma.block(j, j), &counts[static_cast<std::size_t>(r0)],
          pyramid_coord{r0 + 1, 1});
    });
    for (const auto& c : counts) fc += c;
  }

  for (int l = 2; l <= N; ++l) {
    const index_t cols = index_t{1} << (N - l);
    const index_t half = (index_t{1} << (l - 1)) - 1;

    // window strips of the couplings between level-l positions and the
    // indices below them
    block_sparse_matrix<Scalar> strips(materialize(derived_pattern{
        fast ? derived_kind::elongated_refined : derived_kind::elongated, N, l,
        k}));
    for (index_t j = 1; j <= cols; ++j) {
      const index_t p = position_index(static_cast<int>(j), l);
      if (fast) {
        strips.block(refined_row_start(static_cast<int>(j), l), j) =
            sigma.block(p - 1, p);
        strips.block(refined_row_start(static_cast<int>(j), l) + 1, j) =
            sigma.block(p + 1, p);
      } else {
        for (index_t i = p - half; i <= p + half; ++i) {
          if (i == p) continue;
          strips.block(compact_below_level(i, l), j) = sigma.block(i, p);
        }
      }
    }

    // processed columns, both index spaces compacted
    block_sparse_matrix<Scalar> processed(materialize(
        derived_pattern{derived_kind::incomplete_vertical, N, l, k}));
    for (int lc = 1; lc < l; ++lc) {
      const index_t chalf = (index_t{1} << (lc - 1)) - 1;
      for (index_t c : level_positions(N, lc)) {
        const index_t cc = compact_below_level(c, l);
        for (index_t i = c - chalf; i <= c + chalf; ++i)
          processed.block(compact_below_level(i, l), cc) = P.block(i, c);
      }
    }

    // projections of the strips onto the processed columns
    auto projected = multiply_patterned(
        processed.transposed(), strips,
        materialize(derived_pattern{
            fast ? derived_kind::elongated_refined_extended
                 : derived_kind::elongated,
            N, l, k}),
        &fc);

    // residual gramians and their orthonormalizers
    block_sparse_matrix<Scalar> gramians(
        materialize(derived_pattern{derived_kind::diagonal_blocks, N, l, k}));
    block_sparse_matrix<Scalar> ortho(
        materialize(derived_pattern{derived_kind::diagonal_blocks, N, l, k}));
    {
      std::vector<flop_counter> counts(static_cast<std::size_t>(cols));
      parallel_for(static_cast<int>(cols), [&](int j0) {
        const index_t j = j0 + 1;
        const index_t p = position_index(static_cast<int>(j), l);
        flop_counter& local = counts[static_cast<std::size_t>(j0)];
        auto& g = gramians.block(j, j);
        g = sigma.block(p, p);
        for (const auto& [i, slot] : projected.pattern().col_entries(j)) {
          (void)i;
          const auto& blk = projected.block_at(slot);
          g.noalias() -= blk.transpose() * blk;
          local.block_multiply(k);
          local.block_add(k);
        }
        ortho.block(j, j) = local_orthonormalize<Scalar>(
            g, &local, pyramid_coord{static_cast<int>(j), l});
      });
      for (const auto& c : counts) fc += c;
    }

    // full window strips of the new columns (before sign and scaling)
    auto lifted = multiply_patterned(
        processed, projected,
        materialize(derived_pattern{derived_kind::elongated, N, l, k}), &fc);
    auto scaled = scale_columns_by_diag(lifted, ortho, &fc);

    for (index_t j = 1; j <= cols; ++j) {
      const index_t p = position_index(static_cast<int>(j), l);
      P.block(p, p) = ortho.block(j, j);
      for (const auto& [i, slot] : scaled.pattern().col_entries(j))
        P.block(expand_below_level(i, l), p) = -scaled.block_at(slot);
    }

    if (opts.observer)
      opts.observer(level_snapshot<Scalar>{l, strips, projected, gramians});
  }

  if (opts.want_residual && sigma.dim() <= tol::residual_dim_cap) {
    const auto pd = P.to_dense();
    const auto sd = sigma.to_dense();
    using dense_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    dense_t delta = pd.transpose() * sd * pd;
    delta -= dense_t::Identity(delta.rows(), delta.cols());
    result.residual = delta.cwiseAbs().maxCoeff();
  }
  return result;
}

// S^{-1} = P P^T through the window-column sweep
template <class Scalar>
struct inverse_result {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inverse;
  flop_counter flops;
  std::optional<double> residual;
};

template <class Scalar>
inverse_result<Scalar> invert(const dyadic_matrix<Scalar>& sigma,
                              const factor_options<Scalar>& opts = {}) {
  factor_options<Scalar> fopts = opts;
  fopts.want_residual = false;
  auto fr = sequential_orthogonalize(sigma, fopts);
  inverse_result<Scalar> out{
      product_with_transpose(fr.P, fr.P, &fr.flops), fr.flops, std::nullopt};
  if (opts.want_residual && sigma.dim() <= tol::residual_dim_cap) {
    using dense_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    dense_t delta = sigma.to_dense() * out.inverse;
    delta -= dense_t::Identity(delta.rows(), delta.cols());
    out.residual = delta.cwiseAbs().maxCoeff();
  }
  return out;
}

// R = P^T S, the vertical-kind factor with R^T R = S and R P = I.  Every
// block of R only needs the window of its own column:
// R(i, j) = sum_{m in window(i)} P(m, i)^T S(m, j).
template <class Scalar>
dyadic_matrix<Scalar> gram_factor(const dyadic_matrix<Scalar>& sigma,
                                  const dyadic_matrix<Scalar>& p,
                                  flop_counter* fc = nullptr) {
  if (sigma.kind() != dyadic_kind::symmetric ||
      p.kind() != dyadic_kind::vertical)
    fail(errc::pattern_violation,
         "needs a symmetric-kind input and a vertical-kind orthogonalizer");
  if (sigma.height() != p.height() || sigma.breadth() != p.breadth())
    fail(errc::dimension_mismatch, "operands live on different pyramids");
  const int k = p.breadth();
  dyadic_matrix<Scalar> r(
      dyadic_pattern{p.height(), k, dyadic_kind::vertical});
  r.for_each_block([&](index_t i, index_t j,
                       typename dyadic_matrix<Scalar>::block_type& blk) {
    const int li = index_level(i);
    const index_t half = (index_t{1} << (li - 1)) - 1;
    bool first = true;
    for (index_t m = i - half; m <= i + half; ++m) {
      if (first) {
        blk.noalias() = p.block(m, i).transpose() * sigma.block(m, j);
        first = false;
      } else {
        blk.noalias() += p.block(m, i).transpose() * sigma.block(m, j);
        if (fc) fc->block_add(k);
      }
      if (fc) fc->block_multiply(k);
    }
  });
  return r;
}

// x = P (P^T y); accepts a previously computed factor
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_with_factor(
    const dyadic_matrix<Scalar>& p,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
    flop_counter* fc = nullptr) {
  if (p.kind() != dyadic_kind::vertical)
    fail(errc::pattern_violation, "solver needs a vertical-kind factor");
  if (y.rows() != p.dim())
    fail(errc::dimension_mismatch, "right-hand side has the wrong length");
  const int k = p.breadth();
  const index_t bd = p.block_dim();
  using vec_t = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  vec_t z = vec_t::Zero(y.rows());
  vec_t x = vec_t::Zero(y.rows());
  for (index_t c = 1; c <= bd; ++c) {
    const int l = index_level(c);
    const index_t half = (index_t{1} << (l - 1)) - 1;
    auto zc = z.segment((c - 1) * k, k);
    for (index_t i = c - half; i <= c + half; ++i) {
      zc.noalias() += p.block(i, c).transpose() * y.segment((i - 1) * k, k);
      if (fc) fc->unit(static_cast<std::uint64_t>(k) * k);
    }
  }
  for (index_t c = 1; c <= bd; ++c) {
    const int l = index_level(c);
    const index_t half = (index_t{1} << (l - 1)) - 1;
    for (index_t i = c - half; i <= c + half; ++i) {
      x.segment((i - 1) * k, k).noalias() +=
          p.block(i, c) * z.segment((c - 1) * k, k);
      if (fc) fc->unit(static_cast<std::uint64_t>(k) * k);
    }
  }
  return x;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve(
    const dyadic_matrix<Scalar>& sigma,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
    const factor_options<Scalar>& opts = {}, flop_counter* fc = nullptr) {
  factor_options<Scalar> fopts = opts;
  fopts.want_residual = false;
  auto fr = sequential_orthogonalize(sigma, fopts);
  if (fc) *fc += fr.flops;
  return solve_with_factor(fr.P, y, fc);
}

}  // namespace dyapack
