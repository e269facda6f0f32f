#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dyapack/errors.hpp"

namespace dyapack {

using index_t = std::int64_t;

// Heights are capped so that block indices fit comfortably in 64-bit keys.
inline constexpr int max_height = 30;

// A dyadic pyramid of height N organizes the indices 1 .. 2^N - 1 into
// levels: index i sits at level ctz(i) + 1, so level l holds the positions
// 2^{l-1} (2r - 1) for r = 1 .. 2^{N-l}.  The window (span) of a position is
// the contiguous run of indices it dominates.

struct pyramid_coord {
  int r;  // position within the level, 1-based
  int l;  // level, 1-based
  friend bool operator==(const pyramid_coord&, const pyramid_coord&) = default;
};

// index of position r at level l: 2^{l-1} (2r - 1)
constexpr index_t position_index(int r, int l) {
  return static_cast<index_t>(2 * r - 1) << (l - 1);
}

// level of index i >= 1: one plus the number of trailing zero bits
int index_level(index_t i);

// the level-L position whose window contains i; requires index_level(i) <= L
index_t ancestor_at_level(index_t i, int L);

// argument checks shared by the free functions below
void check_height(int N);
void check_level(int N, int l);
void check_coord(int N, int r, int l);
void check_index(int N, index_t i);

// all positions of level l, ascending
std::vector<index_t> level_positions(int N, int l);

// the window of position (r, l): 2^{l-1}(2r-1) + {-2^{l-1}+1, ..., 2^{l-1}-1}
std::vector<index_t> level_span(int N, int r, int l);

// bijection between the level-major enumeration order (level 1 first, then
// level 2, ... positions ascending inside a level) and pyramid coordinates
pyramid_coord sequential_to_pyramid(int N, index_t i);
index_t pyramid_to_sequential(int N, pyramid_coord c);

enum class dyadic_kind {
  horizontal,  // rows are positions, columns range over the row's window
  vertical,    // columns are positions, rows range over the column's window
  symmetric,   // union of the two, including the diagonal
};

const char* kind_name(dyadic_kind k);
std::optional<dyadic_kind> kind_from_name(const std::string& s);

// Block pattern of a dyadic matrix: height N, block breadth k (each stored
// block is k x k), and which arms are present.
struct dyadic_pattern {
  int N = 1;
  int k = 1;
  dyadic_kind kind = dyadic_kind::symmetric;
};

void validate(const dyadic_pattern& p);

// number of blocks in the pattern: (2N-3) 2^N + 3 for the symmetric kind,
// (N-1) 2^N + 1 for each single-armed kind
index_t pattern_block_count(const dyadic_pattern& p);

// Patterns that appear while sweeping the factorization level by level.
// Rows of the first four live in the "compacted" space: indices of level < l
// renumbered consecutively while keeping their natural order; columns are the
// level-l positions renumbered 1 .. 2^{N-l}.
enum class derived_kind {
  diagonal_blocks,        // one block per level-l position, on the diagonal
  elongated,              // full window strips: each column j covers the
                          //   2^l - 2 compacted rows under its position
  elongated_refined,      // only the two rows natural-adjacent to the position
  elongated_refined_extended,  // rows reachable from those two along the
                               //   ancestor chains inside the window
  incomplete_symmetric,   // symmetric pattern restricted to levels < l:
                          //   block diagonal with 2^{N-l+1} windows
  incomplete_vertical,
  incomplete_horizontal,
};

const char* derived_kind_name(derived_kind k);

struct derived_pattern {
  derived_kind base = derived_kind::elongated;
  int N = 1;
  int l = 2;
  int k = 1;
};

void validate(const derived_pattern& p);

// rank of index i among the indices of level < l (1-based); requires
// index_level(i) < l
index_t compact_below_level(index_t i, int l);
// inverse of compact_below_level
index_t expand_below_level(index_t c, int l);

// row offset of the refined strip for column j at level l:
// the two retained rows are this value and this value + 1
index_t refined_row_start(int j, int l);

// compacted row offsets (relative to refined_row_start) of the rows the
// refined strips can propagate to along ancestor chains; ascending, size
// 2(l-1), always contains {0, 1}
std::vector<index_t> refined_extended_offsets(int l);

// Explicit block index set plus lookup structure.  index_set is sorted
// lexicographically; rows/cols adjacency lists are built once and reused by
// the patterned products.
class block_sparsity_pattern {
 public:
  block_sparsity_pattern() = default;
  block_sparsity_pattern(std::vector<std::pair<index_t, index_t>> coords,
                         index_t block_rows, index_t block_cols, int k);

  int k() const { return k_; }
  index_t block_rows() const { return block_rows_; }
  index_t block_cols() const { return block_cols_; }
  const std::vector<std::pair<index_t, index_t>>& index_set() const {
    return coords_;
  }
  std::size_t size() const { return coords_.size(); }

  bool contains(index_t i, index_t j) const;
  // slot of (i, j) inside index_set, if present
  std::optional<std::size_t> find(index_t i, index_t j) const;

  // (column, slot) pairs of row i, ascending by column
  const std::vector<std::pair<index_t, std::size_t>>& row_entries(index_t i) const;
  // (row, slot) pairs of column j, ascending by row
  const std::vector<std::pair<index_t, std::size_t>>& col_entries(index_t j) const;

  block_sparsity_pattern transposed() const;

 private:
  std::vector<std::pair<index_t, index_t>> coords_;
  index_t block_rows_ = 0;
  index_t block_cols_ = 0;
  int k_ = 1;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
  std::vector<std::vector<std::pair<index_t, std::size_t>>> rows_;
  std::vector<std::vector<std::pair<index_t, std::size_t>>> cols_;
};

block_sparsity_pattern materialize(const dyadic_pattern& p);
block_sparsity_pattern materialize(const derived_pattern& p);

// the two strip patterns used by the block-tridiagonal fast path at level l
std::pair<block_sparsity_pattern, block_sparsity_pattern>
refined_elongated_support(int N, int l, int k = 1);

// block coordinates reachable by a structural product: {(i, j) : exists m
// with (i, m) in a and (m, j) in b}, sorted
std::vector<std::pair<index_t, index_t>> support_product(
    const block_sparsity_pattern& a, const block_sparsity_pattern& b);

}  // namespace dyapack
