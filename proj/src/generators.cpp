#include "dyapack/generators.hpp"

#include <cmath>
#include <sstream>

#include "dyapack/errors.hpp"
#include "dyapack/neighbor.hpp"
#include "dyapack/rng.hpp"

namespace dyapack {

namespace {

constexpr int max_redraws = 100;

void check_band_args(int d, int lambda) {
  if (d < 1) fail(errc::range_error, "dimension must be >= 1");
  if (lambda < 0 || lambda > d - 1)
    fail(errc::range_error,
         "half-bandwidth must be in 0.." + std::to_string(d - 1));
}

void check_p(double p) {
  if (!(p > 0.0) || p > 1.0)
    fail(errc::range_error, "fill probability must be in (0, 1]");
}

// dense generators are meant for desk-scale experiments
int checked_dim(int N, int k) {
  const index_t d = ((index_t{1} << N) - 1) * k;
  if (d > (index_t{1} << 16))
    fail(errc::range_error,
         "structure of height " + std::to_string(N) + " and breadth " +
             std::to_string(k) + " is too large to hold densely");
  return static_cast<int>(d);
}

// redraw loop shared by the random structure families; fill(rng, out) writes
// the strict upper triangle of the support
template <class Fill>
Eigen::MatrixXd connected_structure(int d, std::uint64_t seed,
                                    std::uint64_t tag, const Fill& fill) {
  for (int attempt = 0; attempt < max_redraws; ++attempt) {
    xoshiro256pp rng(seed, stream::with_attempt(tag, attempt));
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(d, d);
    fill(rng, out);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) out(j, i) = out(i, j);
    const auto comps = components(neighborhoods(out));
    if (comps.size() == 1) return out;
    if (attempt == max_redraws - 1)
      throw disconnected_error(
          "structure stayed disconnected after " +
              std::to_string(max_redraws) + " draws",
          comps);
  }
  fail(errc::internal_inconsistency, "unreachable");
}

}  // namespace

const char* family_name(gen_family f) {
  switch (f) {
    case gen_family::full_band: return "full_band";
    case gen_family::random_band: return "random_band";
    case gen_family::block_tridiagonal: return "block_tridiagonal";
    case gen_family::dyadic: return "dyadic";
    case gen_family::banded_dyadic: return "banded_dyadic";
  }
  return "unknown";
}

std::optional<gen_family> family_from_name(const std::string& s) {
  for (gen_family f :
       {gen_family::full_band, gen_family::random_band,
        gen_family::block_tridiagonal, gen_family::dyadic,
        gen_family::banded_dyadic})
    if (s == family_name(f)) return f;
  return std::nullopt;
}

std::string to_text(const gen_spec& spec) {
  std::ostringstream out;
  out << "family=" << family_name(spec.family);
  switch (spec.family) {
    case gen_family::full_band:
      out << " d=" << spec.d << " lambda=" << spec.lambda;
      break;
    case gen_family::random_band:
      out << " d=" << spec.d << " lambda=" << spec.lambda << " p=" << spec.p
          << " seed=" << spec.seed;
      break;
    case gen_family::block_tridiagonal:
    case gen_family::dyadic:
      out << " N=" << spec.N << " k=" << spec.k << " p=" << spec.p
          << " seed=" << spec.seed;
      break;
    case gen_family::banded_dyadic:
      out << " N=" << spec.N << " k=" << spec.k << " lambda=" << spec.lambda
          << " p=" << spec.p << " seed=" << spec.seed;
      break;
  }
  return out.str();
}

gen_spec gen_spec_from_text(const std::string& text) {
  gen_spec spec;
  bool have_family = false;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      fail(errc::io_error, "malformed generator token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    try {
      if (key == "family") {
        const auto f = family_from_name(val);
        if (!f) fail(errc::io_error, "unknown family '" + val + "'");
        spec.family = *f;
        have_family = true;
      } else if (key == "d") {
        spec.d = std::stoi(val);
      } else if (key == "N") {
        spec.N = std::stoi(val);
      } else if (key == "k") {
        spec.k = std::stoi(val);
      } else if (key == "lambda") {
        spec.lambda = std::stoi(val);
      } else if (key == "p") {
        spec.p = std::stod(val);
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else {
        fail(errc::io_error, "unknown generator key '" + key + "'");
      }
    } catch (const error&) {
      throw;
    } catch (const std::exception&) {
      fail(errc::io_error, "malformed generator value '" + tok + "'");
    }
  }
  if (!have_family)
    fail(errc::io_error, "generator description names no family");
  return spec;
}

Eigen::MatrixXd full_band(int d, int lambda) {
  check_band_args(d, lambda);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = std::max(0, i - lambda); j <= std::min(d - 1, i + lambda); ++j)
      out(i, j) = 1.0;
  return out;
}

Eigen::MatrixXd random_band(int d, int lambda, double p, std::uint64_t seed) {
  check_band_args(d, lambda);
  check_p(p);
  return connected_structure(
      d, seed, stream::band_fill, [&](xoshiro256pp& rng, Eigen::MatrixXd& out) {
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j <= std::min(d - 1, i + lambda); ++j)
            if (rng.bernoulli(p)) out(i, j) = 1.0;
      });
}

Eigen::MatrixXd block_tridiagonal_structure(int N, int k, double p,
                                            std::uint64_t seed) {
  validate(dyadic_pattern{N, k, dyadic_kind::symmetric});
  check_p(p);
  const int d = checked_dim(N, k);
  return connected_structure(
      d, seed, stream::tridiagonal_fill,
      [&](xoshiro256pp& rng, Eigen::MatrixXd& out) {
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j) {
            if (std::abs(i / k - j / k) > 1) continue;
            if (rng.bernoulli(p)) out(i, j) = 1.0;
          }
      });
}

Eigen::MatrixXd dyadic_structure(int N, int k, double p, std::uint64_t seed) {
  return banded_dyadic_structure(N, k, p, checked_dim(N, k) - 1, seed);
}

Eigen::MatrixXd banded_dyadic_structure(int N, int k, double p, int lambda,
                                        std::uint64_t seed) {
  validate(dyadic_pattern{N, k, dyadic_kind::symmetric});
  check_p(p);
  const int d = checked_dim(N, k);
  check_band_args(d, lambda);
  const auto pattern = materialize(dyadic_pattern{N, k, dyadic_kind::symmetric});
  return connected_structure(
      d, seed, stream::dyadic_fill,
      [&](xoshiro256pp& rng, Eigen::MatrixXd& out) {
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j) {
            if (j - i > lambda) continue;
            if (!pattern.contains(i / k + 1, j / k + 1)) continue;
            if (rng.bernoulli(p)) out(i, j) = 1.0;
          }
      });
}

Eigen::MatrixXd generate(const gen_spec& spec) {
  switch (spec.family) {
    case gen_family::full_band:
      return full_band(spec.d, spec.lambda);
    case gen_family::random_band:
      return random_band(spec.d, spec.lambda, spec.p, spec.seed);
    case gen_family::block_tridiagonal:
      return block_tridiagonal_structure(spec.N, spec.k, spec.p, spec.seed);
    case gen_family::dyadic:
      return dyadic_structure(spec.N, spec.k, spec.p, spec.seed);
    case gen_family::banded_dyadic:
      return banded_dyadic_structure(spec.N, spec.k, spec.p, spec.lambda,
                                     spec.seed);
  }
  fail(errc::internal_inconsistency, "unhandled family");
}

spd_dyadic_result spd_dyadic(int N, int k, std::uint64_t seed,
                             double cond_target) {
  validate(dyadic_pattern{N, k, dyadic_kind::symmetric});
  (void)checked_dim(N, k);
  if (cond_target < 0.0)
    fail(errc::range_error, "condition target must be >= 0");

  dyadic_matrix<double> base(dyadic_pattern{N, k, dyadic_kind::vertical});
  xoshiro256pp rng(seed, stream::spd_entries);
  base.for_each_block([&](index_t, index_t,
                          dyadic_matrix<double>::block_type& b) {
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) b(r, c) = rng.uniform(-1.0, 1.0);
  });

  double lift = std::sqrt(static_cast<double>(k));
  for (int rounds = 0;; ++rounds) {
    dyadic_matrix<double> factor = base;
    factor.for_each_block([&](index_t i, index_t j,
                              dyadic_matrix<double>::block_type& b) {
      if (i != j) return;
      for (int t = 0; t < k; ++t) b(t, t) += lift;
    });
    const Eigen::MatrixXd fd = factor.to_dense();
    const Eigen::MatrixXd dense = fd.transpose() * fd;
    auto sigma =
        from_dense(dense, dyadic_pattern{N, k, dyadic_kind::symmetric});
    if (cond_target <= 0.0) return {std::move(sigma), std::move(factor)};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo <= cond_target)
      return {std::move(sigma), std::move(factor)};
    if (rounds >= 60)
      fail(errc::definiteness,
           "condition target " + std::to_string(cond_target) +
               " unreachable by lifting the diagonal");
    lift *= 2.0;
  }
}

dyadic_matrix<double> spd_block_tridiagonal(int N, int k, std::uint64_t seed) {
  validate(dyadic_pattern{N, k, dyadic_kind::symmetric});
  const int d = checked_dim(N, k);
  const int blocks = d / k;
  xoshiro256pp rng(seed, stream::spd_entries);
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(d, d);
  for (int b = 0; b < blocks; ++b) {
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < r; ++c)
        chol(b * k + r, b * k + c) = rng.uniform(-1.0, 1.0);
      chol(b * k + r, b * k + r) = 1.0 + rng.u01();
    }
    if (b > 0)
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c)
          chol(b * k + r, (b - 1) * k + c) = 0.5 * rng.uniform(-1.0, 1.0);
  }
  const Eigen::MatrixXd dense = chol * chol.transpose();
  return from_dense(dense, dyadic_pattern{N, k, dyadic_kind::symmetric});
}

}  // namespace dyapack
