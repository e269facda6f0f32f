#pragma once

#include <cstdint>

namespace dyapack {

// Cost model used throughout: structured operations are counted in units of
// k x k block multiplies and block additions, scalar work (divisions, square
// roots, single multiply-adds inside small factorizations) in unit_ops.
// scalar_flops folds everything into one number: k^3 per block multiply,
// k^2 per block add, 1 per unit op.
struct flop_counter {
  std::uint64_t block_multiplies = 0;
  std::uint64_t block_adds = 0;
  std::uint64_t unit_ops = 0;
  std::uint64_t scalar_flops = 0;

  void block_multiply(int k) {
    ++block_multiplies;
    scalar_flops += static_cast<std::uint64_t>(k) * k * k;
  }
  void block_add(int k) {
    ++block_adds;
    scalar_flops += static_cast<std::uint64_t>(k) * k;
  }
  void unit(std::uint64_t n = 1) {
    unit_ops += n;
    scalar_flops += n;
  }
  void reset() { *this = flop_counter{}; }

  flop_counter& operator+=(const flop_counter& o) {
    block_multiplies += o.block_multiplies;
    block_adds += o.block_adds;
    unit_ops += o.unit_ops;
    scalar_flops += o.scalar_flops;
    return *this;
  }
};

}  // namespace dyapack
