#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <vector>

#include <Eigen/Dense>

#include "dyapack/errors.hpp"
#include "dyapack/factor.hpp"
#include "dyapack/generators.hpp"
#include "dyapack/parallel.hpp"
#include "dyapack/rng.hpp"

using namespace dyapack;

namespace {

bool bitwise_equal(const dyadic_matrix<double>& a,
                   const dyadic_matrix<double>& b) {
  bool same = a.stored_blocks() == b.stored_blocks();
  a.for_each_block([&](index_t i, index_t j,
                       const dyadic_matrix<double>::block_type& blk) {
    if (!same) return;
    const auto& other = b.block(i, j);
    same = std::memcmp(blk.data(), other.data(),
                       sizeof(double) * blk.size()) == 0;
  });
  return same;
}

}  // namespace

TEST_CASE("local orthonormalizer on hand examples") {
  flop_counter fc;
  Eigen::MatrixXd s1(1, 1);
  s1 << 4.0;
  const Eigen::MatrixXd g1 = local_orthonormalize<double>(s1, &fc, pyramid_coord{1, 1});
  CHECK(g1(0, 0) == 0.5);

  Eigen::MatrixXd s2(2, 2);
  s2 << 4.0, 2.0, 2.0, 2.0;
  const Eigen::MatrixXd g2 = local_orthonormalize<double>(s2, &fc, pyramid_coord{1, 1});
  // inverse transposed Cholesky factor of [[4,2],[2,2]]
  CHECK(g2(0, 0) == 0.5);
  CHECK(g2(0, 1) == -0.5);
  CHECK(g2(1, 0) == 0.0);
  CHECK(g2(1, 1) == 1.0);
  CHECK((g2.transpose() * s2 * g2 - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  // random SPD inputs are orthonormalized to working accuracy
  xoshiro256pp rng(5, 1);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd a(4, 4);
    for (int i = 0; i < 16; ++i) a(i / 4, i % 4) = rng.uniform(-1.0, 1.0);
    const Eigen::MatrixXd spd =
        a * a.transpose() + 4.0 * Eigen::MatrixXd::Identity(4, 4);
    const Eigen::MatrixXd g = local_orthonormalize<double>(spd, nullptr, pyramid_coord{1, 1});
    CHECK((g.transpose() * spd * g - Eigen::MatrixXd::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() < 1e-13);
    // upper triangular by construction
    CHECK(g(1, 0) == 0.0);
    CHECK(g(3, 1) == 0.0);
  }
}

TEST_CASE("non-definite local input is reported with its position") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  try {
    local_orthonormalize<double>(bad, nullptr, pyramid_coord{3, 2});
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::definiteness);
    CHECK(std::string(e.what()).find("(3, 2)") != std::string::npos);
  }
}

TEST_CASE("identity input produces an identity factor") {
  for (int N : {1, 2, 4}) {
    dyadic_matrix<double> eye(dyadic_pattern{N, 3, dyadic_kind::symmetric});
    eye.for_each_block([](index_t i, index_t j,
                          dyadic_matrix<double>::block_type& b) {
      if (i == j) b.setIdentity();
    });
    const auto fr = sequential_orthogonalize(eye);
    CHECK((fr.P.to_dense() - Eigen::MatrixXd::Identity(eye.dim(), eye.dim()))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    REQUIRE(fr.residual.has_value());
    CHECK(*fr.residual == 0.0);
  }
}

TEST_CASE("factorization identity across the parameter grid") {
  for (int N : {2, 3, 4})
    for (int k : {1, 3}) {
      const auto inst = spd_dyadic(N, k, 1000 + 10 * N + k);
      const auto fr = sequential_orthogonalize(inst.sigma);
      CHECK(fr.P.kind() == dyadic_kind::vertical);
      REQUIRE(fr.residual.has_value());
      CHECK(*fr.residual < 1e-10);
      // every height-2 pyramid is block tridiagonal; taller ones are not
      CHECK(fr.used_fast_path == (N == 2));

      const Eigen::MatrixXd pd = fr.P.to_dense();
      const Eigen::MatrixXd sd = inst.sigma.to_dense();
      CHECK((pd.transpose() * sd * pd -
             Eigen::MatrixXd::Identity(pd.rows(), pd.cols()))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    }
}

TEST_CASE("factor and gram factor have the vertical support") {
  const auto inst = spd_dyadic(4, 2, 77);
  const auto fr = sequential_orthogonalize(inst.sigma);
  const auto r = gram_factor(inst.sigma, fr.P);

  // R P = I and R^T R = S
  const Eigen::MatrixXd rd = r.to_dense();
  const Eigen::MatrixXd pd = fr.P.to_dense();
  const Eigen::MatrixXd sd = inst.sigma.to_dense();
  CHECK((rd * pd - Eigen::MatrixXd::Identity(rd.rows(), rd.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK((rd.transpose() * rd - sd).cwiseAbs().maxCoeff() < 1e-10);

  // the dense products stay inside the vertical pattern
  const auto mask = materialize(dyadic_pattern{4, 1, dyadic_kind::vertical});
  const Eigen::MatrixXd full_r = pd.transpose() * sd;
  double outside = 0.0;
  for (index_t i = 1; i <= 15; ++i)
    for (index_t j = 1; j <= 15; ++j) {
      if (mask.contains(i, j)) continue;
      outside = std::max(outside,
                         full_r.block((i - 1) * 2, (j - 1) * 2, 2, 2)
                             .cwiseAbs()
                             .maxCoeff());
    }
  CHECK(outside < 1e-12);
}

TEST_CASE("inverse through the window-column sweep") {
  const auto inst = spd_dyadic(3, 2, 11, 1e6);
  const auto inv = invert(inst.sigma);
  REQUIRE(inv.residual.has_value());
  CHECK(*inv.residual < 1e-8);
  const Eigen::MatrixXd dense_inverse = inst.sigma.to_dense().inverse();
  CHECK((inv.inverse - dense_inverse).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("right-hand side solve") {
  const auto inst = spd_dyadic(4, 3, 13);
  Eigen::VectorXd y(inst.sigma.dim());
  xoshiro256pp rng(13, 2);
  for (index_t i = 0; i < y.rows(); ++i) y(i) = rng.uniform(-1.0, 1.0);
  flop_counter fc;
  const Eigen::VectorXd x = solve(inst.sigma, y, {}, &fc);
  CHECK((inst.sigma.to_dense() * x - y).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(fc.unit_ops > 0);

  // reusing a factor gives the same answer bit for bit
  const auto fr = sequential_orthogonalize(inst.sigma);
  const Eigen::VectorXd x2 = solve_with_factor(fr.P, y);
  CHECK(std::memcmp(x.data(), x2.data(), sizeof(double) * x.size()) == 0);
}

TEST_CASE("block tridiagonal detection") {
  CHECK(is_block_tridiagonal(spd_block_tridiagonal(4, 2, 3)));
  CHECK(!is_block_tridiagonal(spd_dyadic(3, 2, 3).sigma));

  dyadic_matrix<double> eye(dyadic_pattern{3, 1, dyadic_kind::symmetric});
  eye.for_each_block([](index_t i, index_t j,
                        dyadic_matrix<double>::block_type& b) {
    if (i == j) b.setIdentity();
  });
  CHECK(is_block_tridiagonal(eye));  // exact zeros off the tridiagonal
}

TEST_CASE("strip shortcut agrees bit for bit on tridiagonal input") {
  for (std::uint64_t seed : {1, 7, 19, 23}) {
    const auto t = spd_block_tridiagonal(5, 2, seed);
    factor_options<double> general;
    general.fast_path = false;
    const auto a = sequential_orthogonalize(t);
    const auto b = sequential_orthogonalize(t, general);
    CHECK(a.used_fast_path);
    CHECK(!b.used_fast_path);
    CHECK(bitwise_equal(a.P, b.P));
    CHECK(a.flops.scalar_flops < b.flops.scalar_flops);
  }
}

TEST_CASE("level snapshots expose the sweep intermediates") {
  const auto inst = spd_dyadic(4, 2, 5);
  std::vector<int> levels;
  factor_options<double> opts;
  opts.observer = [&](const level_snapshot<double>& snap) {
    levels.push_back(snap.level);
    const index_t cols = index_t{1} << (4 - snap.level);
    CHECK(snap.coupling.pattern().block_cols() == cols);
    CHECK(snap.projected.pattern().block_cols() == cols);
    CHECK(snap.gramians.pattern().block_rows() == cols);
    CHECK(snap.gramians.pattern().size() == static_cast<std::size_t>(cols));
    // general path: full strips of 2^l - 2 rows per column
    CHECK(snap.coupling.pattern().size() ==
          static_cast<std::size_t>(((index_t{1} << snap.level) - 2) * cols));
    // residual gramians are symmetric positive definite
    for (index_t j = 1; j <= cols; ++j) {
      const auto& g = snap.gramians.block(j, j);
      CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  };
  sequential_orthogonalize(inst.sigma, opts);
  CHECK(levels == std::vector<int>{2, 3, 4});
}

TEST_CASE("factorization is deterministic and thread-count invariant") {
  const auto inst = spd_dyadic(5, 2, 99);
  const auto a = sequential_orthogonalize(inst.sigma);
  const auto b = sequential_orthogonalize(inst.sigma);
  CHECK(bitwise_equal(a.P, b.P));
  CHECK(a.flops.scalar_flops == b.flops.scalar_flops);

  const int before = max_threads();
  set_max_threads(4);
  const auto c = sequential_orthogonalize(inst.sigma);
  set_max_threads(before);
  CHECK(bitwise_equal(a.P, c.P));
}

TEST_CASE("non-definite input names the failing pyramid position") {
  auto inst = spd_dyadic(3, 1, 2);
  inst.sigma.block(4, 4)(0, 0) = -100.0;  // ruin the apex
  try {
    sequential_orthogonalize(inst.sigma);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::definiteness);
    CHECK(std::string(e.what()).find("(1, 3)") != std::string::npos);
  }
}

TEST_CASE("embedded identity rows pass through the factorization") {
  Eigen::Matrix2d m;
  m << 2.0, 0.5, 0.5, 3.0;
  const auto sigma = embed_irregular(m, {3, 4}, dyadic_pattern{3, 1});
  const auto fr = sequential_orthogonalize(sigma);
  REQUIRE(fr.residual.has_value());
  CHECK(*fr.residual < 1e-14);

  // untouched coordinates keep exact unit columns
  const Eigen::MatrixXd pd = fr.P.to_dense();
  for (index_t c : {index_t{1}, index_t{2}, index_t{5}, index_t{6}, index_t{7}}) {
    for (index_t r = 1; r <= 7; ++r)
      CHECK(pd(r - 1, c - 1) == (r == c ? 1.0 : 0.0));
    CHECK(pd(c - 1, c - 1) == 1.0);
  }
}

TEST_CASE("residual reporting is optional") {
  const auto inst = spd_dyadic(3, 1, 4);
  factor_options<double> opts;
  opts.want_residual = false;
  const auto fr = sequential_orthogonalize(inst.sigma, opts);
  CHECK(!fr.residual.has_value());
}

TEST_CASE("non-symmetric kinds are rejected") {
  dyadic_matrix<double> v(dyadic_pattern{3, 1, dyadic_kind::vertical});
  CHECK_THROWS_AS(sequential_orthogonalize(v), error);
}
