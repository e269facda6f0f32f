#include "dyapack/pyramid.hpp"

#include <algorithm>
#include <bit>

namespace dyapack {

namespace {

std::uint64_t key_of(index_t i, index_t j) {
  return (static_cast<std::uint64_t>(i) << 32) |
         static_cast<std::uint64_t>(j);
}

std::string coord_str(index_t i, index_t j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace

int index_level(index_t i) {
  if (i < 1) fail(errc::range_error, "index must be >= 1");
  return std::countr_zero(static_cast<std::uint64_t>(i)) + 1;
}

index_t ancestor_at_level(index_t i, int L) {
  if (L < 1 || L > max_height) fail(errc::range_error, "level out of range");
  if (index_level(i) > L)
    fail(errc::range_error, "index lies above the requested level");
  const index_t r = ((i - 1) >> L) + 1;
  return position_index(static_cast<int>(r), L);
}

void check_height(int N) {
  if (N < 1 || N > max_height)
    fail(errc::range_error,
         "height must be in 1.." + std::to_string(max_height) + ", got " +
             std::to_string(N));
}

void check_level(int N, int l) {
  check_height(N);
  if (l < 1 || l > N)
    fail(errc::range_error, "level must be in 1.." + std::to_string(N) +
                                ", got " + std::to_string(l));
}

void check_coord(int N, int r, int l) {
  check_level(N, l);
  const index_t count = index_t{1} << (N - l);
  if (r < 1 || r > count)
    fail(errc::range_error, "position must be in 1.." + std::to_string(count) +
                                " at level " + std::to_string(l) + ", got " +
                                std::to_string(r));
}

void check_index(int N, index_t i) {
  check_height(N);
  const index_t top = (index_t{1} << N) - 1;
  if (i < 1 || i > top)
    fail(errc::range_error, "index must be in 1.." + std::to_string(top) +
                                ", got " + std::to_string(i));
}

std::vector<index_t> level_positions(int N, int l) {
  check_level(N, l);
  const index_t count = index_t{1} << (N - l);
  std::vector<index_t> out;
  out.reserve(static_cast<std::size_t>(count));
  for (index_t r = 1; r <= count; ++r)
    out.push_back(position_index(static_cast<int>(r), l));
  return out;
}

std::vector<index_t> level_span(int N, int r, int l) {
  check_coord(N, r, l);
  const index_t center = position_index(r, l);
  const index_t half = (index_t{1} << (l - 1)) - 1;
  std::vector<index_t> out;
  out.reserve(static_cast<std::size_t>(2 * half + 1));
  for (index_t i = center - half; i <= center + half; ++i) out.push_back(i);
  return out;
}

pyramid_coord sequential_to_pyramid(int N, index_t i) {
  check_index(N, i);
  index_t offset = 0;
  for (int l = 1; l <= N; ++l) {
    const index_t count = index_t{1} << (N - l);
    if (i <= offset + count)
      return pyramid_coord{static_cast<int>(i - offset), l};
    offset += count;
  }
  fail(errc::internal_inconsistency, "sequential index not mapped");
}

index_t pyramid_to_sequential(int N, pyramid_coord c) {
  check_coord(N, c.r, c.l);
  // indices of levels below l: 2^N - 2^{N-l+1}
  const index_t offset = (index_t{1} << N) - (index_t{1} << (N - c.l + 1));
  return offset + c.r;
}

const char* kind_name(dyadic_kind k) {
  switch (k) {
    case dyadic_kind::horizontal: return "horizontal";
    case dyadic_kind::vertical: return "vertical";
    case dyadic_kind::symmetric: return "symmetric";
  }
  return "unknown";
}

std::optional<dyadic_kind> kind_from_name(const std::string& s) {
  if (s == "horizontal" || s == "h") return dyadic_kind::horizontal;
  if (s == "vertical" || s == "v") return dyadic_kind::vertical;
  if (s == "symmetric" || s == "s") return dyadic_kind::symmetric;
  return std::nullopt;
}

void validate(const dyadic_pattern& p) {
  check_height(p.N);
  if (p.k < 1) fail(errc::range_error, "block breadth must be >= 1");
}

index_t pattern_block_count(const dyadic_pattern& p) {
  validate(p);
  const index_t two_n = index_t{1} << p.N;
  if (p.kind == dyadic_kind::symmetric)
    return (2 * index_t{p.N} - 3) * two_n + 3;
  return (index_t{p.N} - 1) * two_n + 1;
}

const char* derived_kind_name(derived_kind k) {
  switch (k) {
    case derived_kind::diagonal_blocks: return "diagonal_blocks";
    case derived_kind::elongated: return "elongated";
    case derived_kind::elongated_refined: return "elongated_refined";
    case derived_kind::elongated_refined_extended:
      return "elongated_refined_extended";
    case derived_kind::incomplete_symmetric: return "incomplete_symmetric";
    case derived_kind::incomplete_vertical: return "incomplete_vertical";
    case derived_kind::incomplete_horizontal: return "incomplete_horizontal";
  }
  return "unknown";
}

void validate(const derived_pattern& p) {
  check_height(p.N);
  if (p.k < 1) fail(errc::range_error, "block breadth must be >= 1");
  const int lo = p.base == derived_kind::diagonal_blocks ? 1 : 2;
  if (p.l < lo || p.l > p.N)
    fail(errc::range_error,
         "sweep level must be in " + std::to_string(lo) + ".." +
             std::to_string(p.N) + ", got " + std::to_string(p.l));
}

index_t compact_below_level(index_t i, int l) {
  if (l < 2) fail(errc::range_error, "compaction needs level >= 2");
  if (index_level(i) >= l)
    fail(errc::range_error, "index is not below the level");
  // remove the multiples of 2^{l-1} preceding i
  return i - (i >> (l - 1));
}

index_t expand_below_level(index_t c, int l) {
  if (l < 2) fail(errc::range_error, "expansion needs level >= 2");
  if (c < 1) fail(errc::range_error, "compacted index must be >= 1");
  // after each run of 2^{l-1} - 1 kept indices one multiple was skipped
  const index_t run = (index_t{1} << (l - 1)) - 1;
  return c + (c - 1) / run;
}

index_t refined_row_start(int j, int l) {
  if (j < 1) fail(errc::range_error, "column must be >= 1");
  if (l < 2) fail(errc::range_error, "refined strips need level >= 2");
  return ((index_t{1} << (l - 1)) - 1) * (2 * index_t{j} - 1);
}

std::vector<index_t> refined_extended_offsets(int l) {
  if (l < 2) fail(errc::range_error, "refined strips need level >= 2");
  std::vector<index_t> out;
  out.reserve(static_cast<std::size_t>(2 * (l - 1)));
  for (int m = 2; m <= l; ++m) out.push_back(-(index_t{1} << (l - m)) + 1);
  for (int m = 2; m <= l; ++m) out.push_back(index_t{1} << (l - m));
  std::sort(out.begin(), out.end());
  return out;
}

block_sparsity_pattern::block_sparsity_pattern(
    std::vector<std::pair<index_t, index_t>> coords, index_t block_rows,
    index_t block_cols, int k)
    : coords_(std::move(coords)),
      block_rows_(block_rows),
      block_cols_(block_cols),
      k_(k) {
  if (k_ < 1) fail(errc::range_error, "block breadth must be >= 1");
  if (block_rows_ < 0 || block_cols_ < 0)
    fail(errc::range_error, "negative pattern dimensions");
  std::sort(coords_.begin(), coords_.end());
  coords_.erase(std::unique(coords_.begin(), coords_.end()), coords_.end());
  lookup_.reserve(coords_.size() * 2);
  rows_.resize(static_cast<std::size_t>(block_rows_) + 1);
  cols_.resize(static_cast<std::size_t>(block_cols_) + 1);
  for (std::size_t s = 0; s < coords_.size(); ++s) {
    const auto [i, j] = coords_[s];
    if (i < 1 || i > block_rows_ || j < 1 || j > block_cols_)
      fail(errc::range_error, "pattern coordinate " + coord_str(i, j) +
                                  " outside the block grid");
    lookup_.emplace(key_of(i, j), s);
    rows_[static_cast<std::size_t>(i)].emplace_back(j, s);
    cols_[static_cast<std::size_t>(j)].emplace_back(i, s);
  }
  // index_set is sorted lexicographically, so row lists are already
  // ascending by column; column lists need their own sort
  for (auto& c : cols_)
    std::sort(c.begin(), c.end());
}

bool block_sparsity_pattern::contains(index_t i, index_t j) const {
  if (i < 1 || i > block_rows_ || j < 1 || j > block_cols_) return false;
  return lookup_.count(key_of(i, j)) != 0;
}

std::optional<std::size_t> block_sparsity_pattern::find(index_t i,
                                                        index_t j) const {
  if (i < 1 || i > block_rows_ || j < 1 || j > block_cols_)
    return std::nullopt;
  auto it = lookup_.find(key_of(i, j));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::pair<index_t, std::size_t>>&
block_sparsity_pattern::row_entries(index_t i) const {
  if (i < 1 || i > block_rows_)
    fail(errc::range_error, "block row out of range");
  return rows_[static_cast<std::size_t>(i)];
}

const std::vector<std::pair<index_t, std::size_t>>&
block_sparsity_pattern::col_entries(index_t j) const {
  if (j < 1 || j > block_cols_)
    fail(errc::range_error, "block column out of range");
  return cols_[static_cast<std::size_t>(j)];
}

block_sparsity_pattern block_sparsity_pattern::transposed() const {
  std::vector<std::pair<index_t, index_t>> coords;
  coords.reserve(coords_.size());
  for (const auto& [i, j] : coords_) coords.emplace_back(j, i);
  return block_sparsity_pattern(std::move(coords), block_cols_, block_rows_,
                                k_);
}

block_sparsity_pattern materialize(const dyadic_pattern& p) {
  validate(p);
  const index_t dim = (index_t{1} << p.N) - 1;
  std::vector<std::pair<index_t, index_t>> coords;
  coords.reserve(static_cast<std::size_t>(pattern_block_count(p)));
  for (int l = 1; l <= p.N; ++l) {
    const index_t count = index_t{1} << (p.N - l);
    for (index_t r = 1; r <= count; ++r) {
      const index_t pos = position_index(static_cast<int>(r), l);
      const index_t half = (index_t{1} << (l - 1)) - 1;
      for (index_t c = pos - half; c <= pos + half; ++c) {
        switch (p.kind) {
          case dyadic_kind::horizontal:
            coords.emplace_back(pos, c);
            break;
          case dyadic_kind::vertical:
            coords.emplace_back(c, pos);
            break;
          case dyadic_kind::symmetric:
            coords.emplace_back(pos, c);
            if (c != pos) coords.emplace_back(c, pos);
            break;
        }
      }
    }
  }
  return block_sparsity_pattern(std::move(coords), dim, dim, p.k);
}

block_sparsity_pattern materialize(const derived_pattern& p) {
  validate(p);
  const int N = p.N;
  const int l = p.l;
  std::vector<std::pair<index_t, index_t>> coords;
  const index_t cols = index_t{1} << (N - l);

  switch (p.base) {
    case derived_kind::diagonal_blocks: {
      for (index_t j = 1; j <= cols; ++j) coords.emplace_back(j, j);
      return block_sparsity_pattern(std::move(coords), cols, cols, p.k);
    }
    case derived_kind::elongated: {
      const index_t strip = (index_t{1} << l) - 2;
      const index_t rows = strip * cols;
      for (index_t j = 1; j <= cols; ++j)
        for (index_t t = 1; t <= strip; ++t)
          coords.emplace_back((j - 1) * strip + t, j);
      return block_sparsity_pattern(std::move(coords), rows, cols, p.k);
    }
    case derived_kind::elongated_refined: {
      const index_t strip = (index_t{1} << l) - 2;
      const index_t rows = strip * cols;
      for (index_t j = 1; j <= cols; ++j) {
        const index_t s = refined_row_start(static_cast<int>(j), l);
        coords.emplace_back(s, j);
        coords.emplace_back(s + 1, j);
      }
      return block_sparsity_pattern(std::move(coords), rows, cols, p.k);
    }
    case derived_kind::elongated_refined_extended: {
      const index_t strip = (index_t{1} << l) - 2;
      const index_t rows = strip * cols;
      const auto offsets = refined_extended_offsets(l);
      for (index_t j = 1; j <= cols; ++j) {
        const index_t s = refined_row_start(static_cast<int>(j), l);
        for (index_t t : offsets) coords.emplace_back(s + t, j);
      }
      return block_sparsity_pattern(std::move(coords), rows, cols, p.k);
    }
    case derived_kind::incomplete_symmetric:
    case derived_kind::incomplete_vertical:
    case derived_kind::incomplete_horizontal: {
      dyadic_kind kind = dyadic_kind::symmetric;
      if (p.base == derived_kind::incomplete_vertical)
        kind = dyadic_kind::vertical;
      if (p.base == derived_kind::incomplete_horizontal)
        kind = dyadic_kind::horizontal;
      // block diagonal: one height-(l-1) window per position of levels >= l,
      // in natural order
      const index_t windows = index_t{1} << (N - l + 1);
      const index_t wdim = (index_t{1} << (l - 1)) - 1;
      const auto window = materialize(dyadic_pattern{l - 1, p.k, kind});
      for (index_t w = 0; w < windows; ++w) {
        const index_t off = w * wdim;
        for (const auto& [i, j] : window.index_set())
          coords.emplace_back(off + i, off + j);
      }
      const index_t dim = windows * wdim;
      return block_sparsity_pattern(std::move(coords), dim, dim, p.k);
    }
  }
  fail(errc::internal_inconsistency, "unhandled derived pattern");
}

std::pair<block_sparsity_pattern, block_sparsity_pattern>
refined_elongated_support(int N, int l, int k) {
  return {materialize(derived_pattern{derived_kind::elongated_refined, N, l, k}),
          materialize(derived_pattern{derived_kind::elongated_refined_extended,
                                      N, l, k})};
}

std::vector<std::pair<index_t, index_t>> support_product(
    const block_sparsity_pattern& a, const block_sparsity_pattern& b) {
  if (a.block_cols() != b.block_rows())
    fail(errc::dimension_mismatch, "inner block dimensions differ");
  std::vector<std::pair<index_t, index_t>> out;
  for (index_t i = 1; i <= a.block_rows(); ++i) {
    std::vector<index_t> cols;
    for (const auto& [m, sa] : a.row_entries(i)) {
      (void)sa;
      for (const auto& [j, sb] : b.row_entries(m)) {
        (void)sb;
        cols.push_back(j);
      }
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    for (index_t j : cols) out.emplace_back(i, j);
  }
  return out;
}

}  // namespace dyapack
