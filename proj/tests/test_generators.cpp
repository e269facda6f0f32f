#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dyapack/dyadic_matrix.hpp"
#include "dyapack/errors.hpp"
#include "dyapack/factor.hpp"
#include "dyapack/generators.hpp"
#include "dyapack/neighbor.hpp"
#include "dyapack/packing.hpp"
#include "dyapack/permutation.hpp"

using namespace dyapack;

namespace {

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.rows() == 0 || (a - b).cwiseAbs().maxCoeff() == 0.0);
}

// every 0-1 family promises a symmetric matrix with unit diagonal
void check_unit_symmetric(const Eigen::MatrixXd& m) {
  REQUIRE(m.rows() == m.cols());
  for (int i = 0; i < m.rows(); ++i) {
    CHECK(m(i, i) == 1.0);
    for (int j = 0; j < m.cols(); ++j) {
      CHECK((m(i, j) == 0.0 || m(i, j) == 1.0));
      CHECK(m(i, j) == m(j, i));
    }
  }
}

int upper_count(const Eigen::MatrixXd& m) {
  int n = 0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != 0.0) ++n;
  return n;
}

}  // namespace

TEST_CASE("full band support law") {
  const Eigen::MatrixXd tri = full_band(5, 1);
  const Eigen::MatrixXd id5 = full_band(5, 0);
  CHECK(bit_equal(id5, Eigen::MatrixXd::Identity(5, 5)));
  CHECK(bit_equal(full_band(7, 6), Eigen::MatrixXd::Ones(7, 7)));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(tri(i, j) == (std::abs(i - j) <= 1 ? 1.0 : 0.0));

  // per-row reach of the full band matches the direct definition
  for (int d : {5, 9, 16}) {
    for (int lambda : {0, 1, 3}) {
      const Eigen::MatrixXd band = full_band(d, lambda);
      const auto rep = packing_stats(band, permutation(d));
      for (int i = 0; i < d; ++i) {
        const int expect = std::max(std::min(i, lambda),
                                    std::min(d - 1 - i, lambda));
        CHECK(rep.reach[static_cast<std::size_t>(i)] == expect);
      }
      CHECK(rep.half_bandwidth == std::min(lambda, d - 1));
    }
  }

  try {
    full_band(0, 0);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::range_error);
  }
  try {
    full_band(5, 5);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::range_error);
  }
  try {
    full_band(5, -1);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::range_error);
  }
}

TEST_CASE("random band fill statistics") {
  CHECK(bit_equal(random_band(40, 3, 1.0, 9), full_band(40, 3)));

  const int d = 500;
  const int lambda = 10;
  const double p = 0.6;
  // admissible strictly-upper slots: d*lambda - lambda*(lambda+1)/2
  const double slots = d * lambda - lambda * (lambda + 1) / 2;
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Eigen::MatrixXd m = random_band(d, lambda, p, seed);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (m(i, j) != 0.0) CHECK(j - i <= lambda);
    total += upper_count(m);
  }
  const double mean = total / 50.0;
  const double sigma_mean = std::sqrt(slots * p * (1.0 - p) / 50.0);
  CHECK(std::abs(mean - p * slots) <= 3.0 * sigma_mean);

  const Eigen::MatrixXd small = random_band(30, 2, 0.7, 4);
  check_unit_symmetric(small);
  CHECK(bit_equal(small, random_band(30, 2, 0.7, 4)));
  CHECK_FALSE(bit_equal(small, random_band(30, 2, 0.7, 5)));
  CHECK(components(neighborhoods(small)).size() == 1);

  try {
    random_band(10, 2, 0.0, 1);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::range_error);
  }
  try {
    random_band(10, 2, 1.5, 1);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::range_error);
  }
}

TEST_CASE("block tridiagonal structures stay in block support") {
  const Eigen::MatrixXd full = block_tridiagonal_structure(2, 2, 1.0, 1);
  REQUIRE(full.rows() == 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(full(i, j) == (std::abs(i / 2 - j / 2) <= 1 ? 1.0 : 0.0));

  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const Eigen::MatrixXd m = block_tridiagonal_structure(3, 3, 0.7, seed);
    REQUIRE(m.rows() == 21);
    check_unit_symmetric(m);
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 21; ++j)
        if (std::abs(i / 3 - j / 3) > 1) CHECK(m(i, j) == 0.0);
    CHECK(components(neighborhoods(m)).size() == 1);
  }
}

TEST_CASE("dyadic structures stay in pyramid support") {
  const auto pat32 = materialize(dyadic_pattern{3, 2, dyadic_kind::symmetric});
  const Eigen::MatrixXd full = dyadic_structure(3, 2, 1.0, 1);
  REQUIRE(full.rows() == 14);
  for (int i = 0; i < 14; ++i)
    for (int j = 0; j < 14; ++j)
      CHECK(full(i, j) == (pat32.contains(i / 2 + 1, j / 2 + 1) ? 1.0 : 0.0));

  // a band at least as wide as the matrix changes nothing
  CHECK(bit_equal(banded_dyadic_structure(3, 2, 1.0, 13, 1), full));
  CHECK(bit_equal(banded_dyadic_structure(4, 1, 0.6, 14, 5),
                  dyadic_structure(4, 1, 0.6, 5)));

  const Eigen::MatrixXd clipped = banded_dyadic_structure(3, 2, 1.0, 2, 1);
  for (int i = 0; i < 14; ++i)
    for (int j = 0; j < 14; ++j) {
      const bool in = pat32.contains(i / 2 + 1, j / 2 + 1) &&
                      std::abs(i - j) <= 2;
      CHECK(clipped(i, j) == ((in || i == j) ? 1.0 : 0.0));
    }

  for (std::uint64_t seed : {2, 9}) {
    const Eigen::MatrixXd m = banded_dyadic_structure(4, 2, 0.5, 6, seed);
    check_unit_symmetric(m);
    const auto pat = materialize(dyadic_pattern{4, 2, dyadic_kind::symmetric});
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0.0 && i != j) {
          CHECK(pat.contains(i / 2 + 1, j / 2 + 1));
          CHECK(std::abs(i - j) <= 6);
        }
    CHECK(components(neighborhoods(m)).size() == 1);
  }

  // the banded family at survey scale: N=5, k=10, lambda=60 lives at d=310
  const Eigen::MatrixXd big = banded_dyadic_structure(5, 10, 0.5, 60, 7);
  REQUIRE(big.rows() == 310);
  const auto pat = materialize(dyadic_pattern{5, 10, dyadic_kind::symmetric});
  for (int i = 0; i < 310; ++i)
    for (int j = i + 1; j < 310; ++j)
      if (big(i, j) != 0.0) {
        CHECK(pat.contains(i / 10 + 1, j / 10 + 1));
        CHECK(j - i <= 60);
      }
  CHECK(components(neighborhoods(big)).size() == 1);
}

TEST_CASE("generator descriptions round-trip as text") {
  gen_spec band;
  band.family = gen_family::full_band;
  band.d = 5;
  band.lambda = 1;
  CHECK(to_text(band) == "family=full_band d=5 lambda=1");

  gen_spec rnd;
  rnd.family = gen_family::random_band;
  rnd.d = 9;
  rnd.lambda = 2;
  rnd.p = 0.5;
  rnd.seed = 7;
  CHECK(to_text(rnd) == "family=random_band d=9 lambda=2 p=0.5 seed=7");

  gen_spec dy;
  dy.family = gen_family::banded_dyadic;
  dy.N = 5;
  dy.k = 10;
  dy.lambda = 60;
  dy.p = 0.25;
  dy.seed = 42;
  CHECK(to_text(dy) ==
        "family=banded_dyadic N=5 k=10 lambda=60 p=0.25 seed=42");

  for (const gen_spec& s : {band, rnd, dy}) {
    const gen_spec back = gen_spec_from_text(to_text(s));
    CHECK(back.family == s.family);
    CHECK(to_text(back) == to_text(s));
    CHECK(bit_equal(generate(back), generate(s)));
  }

  for (gen_family f :
       {gen_family::full_band, gen_family::random_band,
        gen_family::block_tridiagonal, gen_family::dyadic,
        gen_family::banded_dyadic})
    CHECK(family_from_name(family_name(f)) == f);
  CHECK_FALSE(family_from_name("frobnicate").has_value());

  for (const char* bad :
       {"family=frobnicate d=5", "family=dyadic N=3 k=2 extra=9",
        "N=3 k=2 p=0.5", "family=dyadic N=x", "family dyadic"}) {
    try {
      gen_spec_from_text(bad);
      FAIL("unreachable");
    } catch (const error& e) {
      CHECK(e.code() == errc::io_error);
    }
  }
}

TEST_CASE("generate dispatches to the named family") {
  gen_spec s;
  s.family = gen_family::dyadic;
  s.N = 3;
  s.k = 2;
  s.p = 0.8;
  s.seed = 11;
  CHECK(bit_equal(generate(s), dyadic_structure(3, 2, 0.8, 11)));

  s.family = gen_family::block_tridiagonal;
  CHECK(bit_equal(generate(s), block_tridiagonal_structure(3, 2, 0.8, 11)));

  s.family = gen_family::full_band;
  s.d = 9;
  s.lambda = 3;
  CHECK(bit_equal(generate(s), full_band(9, 3)));
}

TEST_CASE("oversized structures are rejected before allocation") {
  for (auto run : {+[] { dyadic_structure(17, 2, 0.5, 1); },
                   +[] { block_tridiagonal_structure(16, 2, 0.5, 1); },
                   +[] { (void)spd_dyadic(17, 2, 1); },
                   +[] { (void)spd_block_tridiagonal(16, 2, 1); }}) {
    try {
      run();
      FAIL("unreachable");
    } catch (const error& e) {
      CHECK(e.code() == errc::range_error);
    }
  }
}

TEST_CASE("spd instances carry their factor exactly") {
  for (int N : {2, 3, 4}) {
    for (int k : {1, 3}) {
      const auto inst = spd_dyadic(N, k, 100 + static_cast<std::uint64_t>(N));
      CHECK(inst.sigma.kind() == dyadic_kind::symmetric);
      CHECK(inst.factor.kind() == dyadic_kind::vertical);
      const Eigen::MatrixXd fd = inst.factor.to_dense();
      CHECK(bit_equal(inst.sigma.to_dense(),
                      Eigen::MatrixXd(fd.transpose() * fd)));

      // factorize and rebuild: the gram factor reproduces sigma
      auto fr = sequential_orthogonalize(inst.sigma);
      auto r = gram_factor(inst.sigma, fr.P);
      const Eigen::MatrixXd rd = r.to_dense();
      const Eigen::MatrixXd back = rd.transpose() * rd;
      CHECK((back - inst.sigma.to_dense()).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  const auto a = spd_dyadic(3, 2, 5);
  const auto b = spd_dyadic(3, 2, 5);
  CHECK(bit_equal(a.sigma.to_dense(), b.sigma.to_dense()));
  CHECK(bit_equal(a.factor.to_dense(), b.factor.to_dense()));
  CHECK_FALSE(bit_equal(a.sigma.to_dense(), spd_dyadic(3, 2, 6).sigma.to_dense()));

  const auto tame = spd_dyadic(4, 2, 9, 1e6);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tame.sigma.to_dense());
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  CHECK(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff() <= 1e6);

  try {
    (void)spd_dyadic(3, 2, 1, -1.0);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::range_error);
  }
}

TEST_CASE("spd block tridiagonal instances vanish off the block band") {
  const auto sigma = spd_block_tridiagonal(4, 3, 21);
  const Eigen::MatrixXd dense = sigma.to_dense();
  REQUIRE(dense.rows() == 45);
  for (int i = 0; i < 45; ++i)
    for (int j = 0; j < 45; ++j)
      if (std::abs(i / 3 - j / 3) > 1) CHECK(dense(i, j) == 0.0);
  CHECK(bit_equal(dense, dense.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  CHECK(bit_equal(dense, spd_block_tridiagonal(4, 3, 21).to_dense()));
}

TEST_CASE("impossible draws surface the components") {
  // lambda = 0 leaves nothing to connect the two rows, on every redraw
  try {
    random_band(2, 0, 0.5, 3);
    FAIL("unreachable");
  } catch (const disconnected_error& e) {
    CHECK(e.code() == errc::disconnected);
    CHECK(e.components().size() == 2);
    CHECK(std::string(e.what()).find("100") != std::string::npos);
  }
}

TEST_CASE("relabeling diagnostics are invariant under the relabel itself") {
  const Eigen::MatrixXd sigma = random_band(30, 4, 0.7, 13);
  const permutation pi = random_permutation(30, 77);
  const auto direct = packing_stats(sigma, pi);
  // relabeling i -> pi(i) means old row pi^{-1}(a) lands at position a
  const auto unwound = packing_stats(apply_permutation(sigma, pi.inverse()),
                                     permutation(30));
  CHECK(direct.reach_total == unwound.reach_total);
  CHECK(direct.half_bandwidth == unwound.half_bandwidth);

  // apply then undo is the identity relabeling
  const Eigen::MatrixXd redone =
      apply_permutation(apply_permutation(sigma, pi), pi.inverse());
  CHECK(bit_equal(redone, sigma));
  CHECK(bit_equal(apply_permutation(sigma, permutation(30)), sigma));

  Eigen::MatrixXd stamp(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) stamp(i, j) = 10.0 * (i + 1) + (j + 1);
  const permutation rho = permutation::from_image({3, 1, 2});
  const Eigen::MatrixXd moved = apply_permutation(stamp, rho);
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j)
      CHECK(moved(i - 1, j - 1) == 10.0 * rho(i) + rho(j));

  try {
    apply_permutation(stamp, permutation(4));
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::dimension_mismatch);
  }
}
