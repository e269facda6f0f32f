#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace dyapack {

// Row neighborhoods of a symmetric sparsity structure: D_i is the set of
// columns where row i is nonzero, always including i itself.  Kept both as
// sorted lists and as bitset rows so set algebra stays cheap.
struct neighbor_graph {
  int d = 0;
  std::vector<std::vector<int>> sets;        // 1-based members, ascending
  std::vector<std::vector<std::uint64_t>> bits;

  int set_size(int i) const {
    return static_cast<int>(sets[static_cast<std::size_t>(i - 1)].size());
  }
  const std::vector<int>& set(int i) const {
    return sets[static_cast<std::size_t>(i - 1)];
  }
  bool adjacent(int i, int j) const {
    const auto& row = bits[static_cast<std::size_t>(i - 1)];
    return (row[static_cast<std::size_t>((j - 1) >> 6)] >>
            ((j - 1) & 63)) & 1u;
  }
  // |set(i) symmetric-difference set(j)|
  int symm_diff_size(int i, int j) const;
};

neighbor_graph make_neighbor_graph(int d);
void graph_insert(neighbor_graph& g, int i, int j);

// entries with |value| > threshold count as nonzero; asymmetric structure is
// rejected
neighbor_graph neighborhoods(const Eigen::MatrixXd& sigma,
                             double threshold = 0.0);

// s-step closure: D_i(s) collects everything within graph distance s of i.
// outskirt(i, j) is the exact graph distance (0 on the diagonal, -1 when
// unreachable), so L_i(s) = {j : outskirt(i, j) = s}.
struct t_order_result {
  neighbor_graph graph;                  // D_i(t)
  std::vector<std::vector<int>> outskirt;
};

t_order_result t_order(const neighbor_graph& g, int t);

// half the symmetric difference of the two neighborhoods, as a dense matrix
Eigen::MatrixXd symm_diff_distance(const neighbor_graph& g);

std::vector<std::vector<int>> components(const neighbor_graph& g);
bool connected(const neighbor_graph& g);

}  // namespace dyapack
