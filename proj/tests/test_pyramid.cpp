#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <vector>

#include "dyapack/errors.hpp"
#include "dyapack/pyramid.hpp"

using namespace dyapack;

namespace {

std::set<std::pair<index_t, index_t>> coord_set(
    const block_sparsity_pattern& p) {
  return {p.index_set().begin(), p.index_set().end()};
}

}  // namespace

TEST_CASE("position index of a pyramid coordinate") {
  // hand values: 2^{l-1} (2r - 1)
  CHECK(position_index(1, 1) == 1);
  CHECK(position_index(2, 1) == 3);
  CHECK(position_index(4, 1) == 7);
  CHECK(position_index(1, 2) == 2);
  CHECK(position_index(2, 2) == 6);
  CHECK(position_index(3, 2) == 10);
  CHECK(position_index(1, 3) == 4);
  CHECK(position_index(2, 3) == 12);
  CHECK(position_index(1, 4) == 8);
}

TEST_CASE("level of an index") {
  CHECK(index_level(1) == 1);
  CHECK(index_level(2) == 2);
  CHECK(index_level(3) == 1);
  CHECK(index_level(4) == 3);
  CHECK(index_level(6) == 2);
  CHECK(index_level(8) == 4);
  CHECK(index_level(12) == 3);

  // inverse of position_index over a whole pyramid
  for (int l = 1; l <= 6; ++l)
    for (int r = 1; r <= (1 << (6 - l)); ++r)
      CHECK(index_level(position_index(r, l)) == l);
}

TEST_CASE("ancestor of an index at a higher level") {
  CHECK(ancestor_at_level(3, 2) == 2);
  CHECK(ancestor_at_level(1, 3) == 4);
  CHECK(ancestor_at_level(5, 2) == 6);
  CHECK(ancestor_at_level(6, 3) == 4);
  CHECK(ancestor_at_level(12, 4) == 8);
  CHECK(ancestor_at_level(6, 2) == 6);  // same level: itself

  // every index inside a window points back to the window's position
  const int N = 5;
  for (int l = 1; l <= N; ++l)
    for (int r = 1; r <= (1 << (N - l)); ++r)
      for (index_t i : level_span(N, r, l))
        CHECK(ancestor_at_level(i, l) == position_index(r, l));
}

TEST_CASE("positions of a level") {
  CHECK(level_positions(3, 1) == std::vector<index_t>{1, 3, 5, 7});
  CHECK(level_positions(3, 2) == std::vector<index_t>{2, 6});
  CHECK(level_positions(3, 3) == std::vector<index_t>{4});
  CHECK(level_positions(4, 2) == std::vector<index_t>{2, 6, 10, 14});
}

TEST_CASE("window of a position") {
  CHECK(level_span(3, 1, 2) == std::vector<index_t>{1, 2, 3});
  CHECK(level_span(3, 2, 2) == std::vector<index_t>{5, 6, 7});
  CHECK(level_span(3, 1, 3) == std::vector<index_t>{1, 2, 3, 4, 5, 6, 7});
  CHECK(level_span(3, 2, 1) == std::vector<index_t>{3});
  CHECK(level_span(4, 2, 3) == std::vector<index_t>{9, 10, 11, 12, 13, 14, 15});
}

TEST_CASE("windows of one level are disjoint and cover the lower levels") {
  const int N = 5;
  for (int l = 1; l <= N; ++l) {
    std::set<index_t> seen;
    for (int r = 1; r <= (1 << (N - l)); ++r)
      for (index_t i : level_span(N, r, l)) {
        CHECK(!seen.count(i));
        seen.insert(i);
        CHECK(index_level(i) <= l);
      }
    // exactly the indices of level <= l
    std::size_t expect = 0;
    for (index_t i = 1; i < (index_t{1} << N); ++i)
      if (index_level(i) <= l) ++expect;
    CHECK(seen.size() == expect);
  }
}

TEST_CASE("level-major enumeration order") {
  // N = 3: levels contribute 4, 2, 1 positions
  CHECK(sequential_to_pyramid(3, 1) == pyramid_coord{1, 1});
  CHECK(sequential_to_pyramid(3, 4) == pyramid_coord{4, 1});
  CHECK(sequential_to_pyramid(3, 5) == pyramid_coord{1, 2});
  CHECK(sequential_to_pyramid(3, 6) == pyramid_coord{2, 2});
  CHECK(sequential_to_pyramid(3, 7) == pyramid_coord{1, 3});
  CHECK(pyramid_to_sequential(3, {1, 3}) == 7);
  CHECK(pyramid_to_sequential(3, {2, 2}) == 6);

  for (int N = 1; N <= 6; ++N)
    for (index_t s = 1; s < (index_t{1} << N); ++s) {
      const pyramid_coord c = sequential_to_pyramid(N, s);
      CHECK(pyramid_to_sequential(N, c) == s);
      CHECK(index_level(position_index(c.r, c.l)) == c.l);
    }
}

TEST_CASE("argument checking") {
  CHECK_THROWS_AS(check_height(0), error);
  CHECK_THROWS_AS(check_height(31), error);
  CHECK_THROWS_AS(check_level(3, 4), error);
  CHECK_THROWS_AS(check_coord(3, 5, 1), error);
  CHECK_THROWS_AS(check_index(3, 8), error);
  CHECK_THROWS_AS(check_index(3, 0), error);
  CHECK_THROWS_AS(validate(dyadic_pattern{0, 1, dyadic_kind::symmetric}),
                  error);
  CHECK_THROWS_AS(validate(dyadic_pattern{3, 0, dyadic_kind::symmetric}),
                  error);
  try {
    check_height(0);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::range_error);
  }
}

TEST_CASE("kind names round trip") {
  CHECK(kind_from_name(kind_name(dyadic_kind::horizontal)) ==
        dyadic_kind::horizontal);
  CHECK(kind_from_name("v") == dyadic_kind::vertical);
  CHECK(kind_from_name("s") == dyadic_kind::symmetric);
  CHECK(!kind_from_name("q").has_value());
}

TEST_CASE("block counts of the dyadic patterns") {
  // symmetric: 1, 7, 27, 83, 227; single arm: 1, 5, 17, 49, 129
  const index_t symmetric[] = {1, 7, 27, 83, 227};
  const index_t single[] = {1, 5, 17, 49, 129};
  for (int N = 1; N <= 5; ++N) {
    CHECK(pattern_block_count({N, 1, dyadic_kind::symmetric}) ==
          symmetric[N - 1]);
    CHECK(pattern_block_count({N, 1, dyadic_kind::horizontal}) ==
          single[N - 1]);
    CHECK(pattern_block_count({N, 1, dyadic_kind::vertical}) ==
          single[N - 1]);
  }
}

TEST_CASE("materialized dyadic patterns") {
  for (int N = 1; N <= 6; ++N) {
    const auto sd = materialize(dyadic_pattern{N, 1, dyadic_kind::symmetric});
    const auto hd = materialize(dyadic_pattern{N, 1, dyadic_kind::horizontal});
    const auto vd = materialize(dyadic_pattern{N, 1, dyadic_kind::vertical});
    CHECK(sd.size() ==
          static_cast<std::size_t>(
              pattern_block_count({N, 1, dyadic_kind::symmetric})));
    CHECK(hd.size() ==
          static_cast<std::size_t>(
              pattern_block_count({N, 1, dyadic_kind::horizontal})));
    CHECK(vd.size() == hd.size());

    // vertical is the transpose of horizontal and the union is symmetric
    CHECK(coord_set(vd) == coord_set(hd.transposed()));
    auto unions = coord_set(hd);
    for (const auto& c : vd.index_set()) unions.insert(c);
    CHECK(unions == coord_set(sd));

    // single-arm membership: (i, j) is vertical iff j is i's ancestor
    const index_t d = (index_t{1} << N) - 1;
    for (index_t i = 1; i <= d; ++i)
      for (index_t j = 1; j <= d; ++j) {
        const bool anc = index_level(j) >= index_level(i) &&
                         ancestor_at_level(i, index_level(j)) == j;
        CHECK(vd.contains(i, j) == anc);
        CHECK(hd.contains(i, j) == vd.contains(j, i));
        CHECK(sd.contains(i, j) == (vd.contains(i, j) || hd.contains(i, j)));
      }
  }
}

TEST_CASE("pattern lookup structure") {
  const auto sd = materialize(dyadic_pattern{3, 2, dyadic_kind::symmetric});
  CHECK(sd.k() == 2);
  CHECK(sd.block_rows() == 7);
  CHECK(std::is_sorted(sd.index_set().begin(), sd.index_set().end()));
  CHECK(sd.contains(4, 1));
  CHECK(sd.contains(1, 4));
  CHECK(!sd.contains(3, 5));
  CHECK(!sd.find(3, 5).has_value());
  const auto slot = sd.find(4, 1);
  REQUIRE(slot.has_value());
  CHECK(sd.index_set()[*slot] == std::pair<index_t, index_t>{4, 1});

  for (index_t i = 1; i <= 7; ++i) {
    const auto& row = sd.row_entries(i);
    CHECK(std::is_sorted(row.begin(), row.end()));
    for (const auto& [j, s] : row) CHECK(sd.index_set()[s].first == i);
    const auto& col = sd.col_entries(i);
    CHECK(std::is_sorted(col.begin(), col.end()));
    for (const auto& [r, s] : col) CHECK(sd.index_set()[s].second == i);
  }
}

TEST_CASE("compacted renumbering below a level") {
  // l = 2 keeps the odd indices
  CHECK(compact_below_level(1, 2) == 1);
  CHECK(compact_below_level(3, 2) == 2);
  CHECK(compact_below_level(7, 2) == 4);
  // l = 3 keeps everything not divisible by 4
  CHECK(compact_below_level(5, 3) == 4);
  CHECK(compact_below_level(6, 3) == 5);
  CHECK(compact_below_level(9, 3) == 7);

  for (int l = 2; l <= 6; ++l) {
    index_t rank = 0;
    for (index_t i = 1; i < (index_t{1} << 6); ++i) {
      if (index_level(i) >= l) continue;
      ++rank;
      CHECK(compact_below_level(i, l) == rank);
      CHECK(expand_below_level(rank, l) == i);
    }
  }
}

TEST_CASE("refined strip rows") {
  CHECK(refined_row_start(1, 2) == 1);
  CHECK(refined_row_start(2, 2) == 3);
  CHECK(refined_row_start(3, 2) == 5);
  CHECK(refined_row_start(1, 3) == 3);
  CHECK(refined_row_start(2, 3) == 9);
  CHECK(refined_row_start(1, 4) == 7);

  // the two retained rows are the compacted images of the position's
  // immediate lower neighbours
  for (int l = 2; l <= 6; ++l)
    for (int j = 1; j <= 4; ++j) {
      const index_t p = position_index(j, l);
      CHECK(refined_row_start(j, l) == compact_below_level(p - 1, l));
      CHECK(refined_row_start(j, l) + 1 == compact_below_level(p + 1, l));
    }
}

TEST_CASE("extended strip row offsets") {
  CHECK(refined_extended_offsets(2) == std::vector<index_t>{0, 1});
  CHECK(refined_extended_offsets(3) == std::vector<index_t>{-1, 0, 1, 2});
  CHECK(refined_extended_offsets(4) ==
        std::vector<index_t>{-3, -1, 0, 1, 2, 4});
  for (int l = 2; l <= 8; ++l) {
    const auto offs = refined_extended_offsets(l);
    CHECK(offs.size() == static_cast<std::size_t>(2 * (l - 1)));
    CHECK(std::is_sorted(offs.begin(), offs.end()));
    CHECK(std::count(offs.begin(), offs.end(), 0) == 1);
    CHECK(std::count(offs.begin(), offs.end(), 1) == 1);
  }
}

TEST_CASE("derived pattern shapes") {
  // diagonal blocks at a level
  const auto d32 = materialize({derived_kind::diagonal_blocks, 3, 2, 1});
  CHECK(coord_set(d32) ==
        std::set<std::pair<index_t, index_t>>{{1, 1}, {2, 2}});
  CHECK(materialize({derived_kind::diagonal_blocks, 3, 1, 1}).size() == 4);

  // elongated strips stack the full windows
  const auto e32 = materialize({derived_kind::elongated, 3, 2, 1});
  CHECK(coord_set(e32) ==
        std::set<std::pair<index_t, index_t>>{{1, 1}, {2, 1}, {3, 2}, {4, 2}});
  const auto e33 = materialize({derived_kind::elongated, 3, 3, 1});
  CHECK(e33.block_rows() == 6);
  CHECK(e33.size() == 6);

  // refined keeps the two centre rows of each strip
  const auto r33 = materialize({derived_kind::elongated_refined, 3, 3, 1});
  CHECK(coord_set(r33) ==
        std::set<std::pair<index_t, index_t>>{{3, 1}, {4, 1}});
  const auto x33 =
      materialize({derived_kind::elongated_refined_extended, 3, 3, 1});
  CHECK(coord_set(x33) ==
        std::set<std::pair<index_t, index_t>>{{2, 1}, {3, 1}, {4, 1}, {5, 1}});

  // refined is contained in extended is contained in elongated
  for (int N = 2; N <= 6; ++N)
    for (int l = 2; l <= N; ++l) {
      const auto [fine, ext] = refined_elongated_support(N, l);
      const auto full = materialize({derived_kind::elongated, N, l, 1});
      const auto fs = coord_set(fine), xs = coord_set(ext),
                 es = coord_set(full);
      CHECK(std::includes(xs.begin(), xs.end(), fs.begin(), fs.end()));
      CHECK(std::includes(es.begin(), es.end(), xs.begin(), xs.end()));
    }
}

TEST_CASE("incomplete window patterns") {
  // height-(l-1) windows repeated along the diagonal
  const auto is32 = materialize({derived_kind::incomplete_symmetric, 3, 2, 1});
  CHECK(is32.block_rows() == 4);
  CHECK(is32.size() == 4);  // four 1 x 1 windows

  const auto is33 = materialize({derived_kind::incomplete_symmetric, 3, 3, 1});
  CHECK(is33.block_rows() == 6);
  CHECK(is33.size() == 14);  // two height-2 symmetric windows, 7 blocks each
  CHECK(is33.contains(1, 2));
  CHECK(is33.contains(4, 5));
  CHECK(!is33.contains(3, 4));  // windows do not touch

  const auto iv33 = materialize({derived_kind::incomplete_vertical, 3, 3, 1});
  const auto ih33 =
      materialize({derived_kind::incomplete_horizontal, 3, 3, 1});
  CHECK(iv33.size() == 10);
  CHECK(coord_set(ih33) == coord_set(iv33.transposed()));
}

TEST_CASE("product support") {
  // support of (vertical pattern) x (tall block vector) stays inside the rows
  const auto vd = materialize(dyadic_pattern{3, 1, dyadic_kind::vertical});
  const auto sd = materialize(dyadic_pattern{3, 1, dyadic_kind::symmetric});
  auto prod = support_product(vd, vd.transposed());
  std::set<std::pair<index_t, index_t>> ps(prod.begin(), prod.end());
  // vertical times horizontal reaches every pair of indices sharing an
  // ancestor; the symmetric pattern is contained in it
  for (const auto& c : sd.index_set()) CHECK(ps.count(c));
}

TEST_CASE("derived pattern validation") {
  CHECK_THROWS_AS(materialize({derived_kind::elongated, 3, 1, 1}), error);
  CHECK_THROWS_AS(materialize({derived_kind::diagonal_blocks, 3, 0, 1}),
                  error);
  CHECK_THROWS_AS(materialize({derived_kind::elongated, 3, 4, 1}), error);
}
