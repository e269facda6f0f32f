#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "dyapack/dyadic_matrix.hpp"

namespace dyapack {

// Seeded test-structure families.  All 0-1 generators return dense symmetric
// matrices with unit diagonal, draw their Bernoulli fills in row-major
// upper-triangle order over the admissible support, and redraw with a fresh
// stream (up to 100 attempts) until the structure is connected.

enum class gen_family {
  full_band,
  random_band,
  block_tridiagonal,
  dyadic,
  banded_dyadic,
};

const char* family_name(gen_family f);
std::optional<gen_family> family_from_name(const std::string& s);

struct gen_spec {
  gen_family family = gen_family::full_band;
  int d = 0;       // band families
  int N = 0;       // structured families
  int k = 0;
  int lambda = 0;  // scalar half-bandwidth
  double p = 1.0;
  std::uint64_t seed = 0;
};

// single-line key=value form, parseable back; unknown keys are rejected
std::string to_text(const gen_spec& spec);
gen_spec gen_spec_from_text(const std::string& text);

Eigen::MatrixXd full_band(int d, int lambda);
Eigen::MatrixXd random_band(int d, int lambda, double p, std::uint64_t seed);
Eigen::MatrixXd block_tridiagonal_structure(int N, int k, double p,
                                            std::uint64_t seed);
Eigen::MatrixXd dyadic_structure(int N, int k, double p, std::uint64_t seed);
Eigen::MatrixXd banded_dyadic_structure(int N, int k, double p, int lambda,
                                        std::uint64_t seed);

Eigen::MatrixXd generate(const gen_spec& spec);

// Symmetric positive definite instance with a known vertical-kind factor:
// sigma = factor^T factor exactly, including the zero blocks outside the
// symmetric pattern.  cond_target > 0 doubles the diagonal lift until the
// dense condition number drops below the target.
struct spd_dyadic_result {
  dyadic_matrix<double> sigma;
  dyadic_matrix<double> factor;
};

spd_dyadic_result spd_dyadic(int N, int k, std::uint64_t seed,
                             double cond_target = 0.0);

// SPD with exact zero blocks beyond the first block off-diagonal; exercises
// the two-row strip shortcut of the factorization
dyadic_matrix<double> spd_block_tridiagonal(int N, int k, std::uint64_t seed);

}  // namespace dyapack
