#include "dyapack/neighbor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "dyapack/errors.hpp"

namespace dyapack {

int neighbor_graph::symm_diff_size(int i, int j) const {
  const auto& a = bits[static_cast<std::size_t>(i - 1)];
  const auto& b = bits[static_cast<std::size_t>(j - 1)];
  int count = 0;
  for (std::size_t w = 0; w < a.size(); ++w)
    count += std::popcount(a[w] ^ b[w]);
  return count;
}

neighbor_graph make_neighbor_graph(int d) {
  if (d < 1) fail(errc::range_error, "graph needs at least one row");
  neighbor_graph g;
  g.d = d;
  g.sets.resize(static_cast<std::size_t>(d));
  g.bits.assign(static_cast<std::size_t>(d),
                std::vector<std::uint64_t>(
                    static_cast<std::size_t>((d + 63) / 64), 0));
  for (int i = 1; i <= d; ++i) graph_insert(g, i, i);
  return g;
}

void graph_insert(neighbor_graph& g, int i, int j) {
  auto& row = g.bits[static_cast<std::size_t>(i - 1)];
  const std::size_t w = static_cast<std::size_t>((j - 1) >> 6);
  const std::uint64_t bit = std::uint64_t{1} << ((j - 1) & 63);
  if (row[w] & bit) return;
  row[w] |= bit;
  auto& set = g.sets[static_cast<std::size_t>(i - 1)];
  auto it = std::lower_bound(set.begin(), set.end(), j);
  set.insert(it, j);
}

neighbor_graph neighborhoods(const Eigen::MatrixXd& sigma, double threshold) {
  if (sigma.rows() != sigma.cols())
    fail(errc::dimension_mismatch, "neighborhoods need a square matrix");
  const int d = static_cast<int>(sigma.rows());
  if (d < 1) fail(errc::range_error, "matrix must be at least 1 x 1");
  neighbor_graph g = make_neighbor_graph(d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const bool ij = std::abs(sigma(i, j)) > threshold;
      const bool ji = std::abs(sigma(j, i)) > threshold;
      if (ij != ji)
        fail(errc::pattern_violation,
             "sparsity structure is asymmetric at (" + std::to_string(i + 1) +
                 ", " + std::to_string(j + 1) + ")");
      if (ij) {
        graph_insert(g, i + 1, j + 1);
        graph_insert(g, j + 1, i + 1);
      }
    }
  return g;
}

t_order_result t_order(const neighbor_graph& g, int t) {
  if (t < 1) fail(errc::range_error, "order must be >= 1");
  t_order_result out;
  out.graph = make_neighbor_graph(g.d);
  out.outskirt.assign(static_cast<std::size_t>(g.d),
                      std::vector<int>(static_cast<std::size_t>(g.d), -1));
  std::vector<int> queue;
  queue.reserve(static_cast<std::size_t>(g.d));
  for (int i = 1; i <= g.d; ++i) {
    auto& dist = out.outskirt[static_cast<std::size_t>(i - 1)];
    queue.clear();
    queue.push_back(i);
    dist[static_cast<std::size_t>(i - 1)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      const int du = dist[static_cast<std::size_t>(u - 1)];
      for (int v : g.set(u)) {
        if (dist[static_cast<std::size_t>(v - 1)] >= 0) continue;
        dist[static_cast<std::size_t>(v - 1)] = du + 1;
        queue.push_back(v);
      }
    }
    for (int j = 1; j <= g.d; ++j) {
      const int dj = dist[static_cast<std::size_t>(j - 1)];
      if (dj >= 0 && dj <= t) graph_insert(out.graph, i, j);
    }
  }
  return out;
}

Eigen::MatrixXd symm_diff_distance(const neighbor_graph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.d, g.d);
  for (int i = 1; i <= g.d; ++i)
    for (int j = i + 1; j <= g.d; ++j) {
      const double v = 0.5 * g.symm_diff_size(i, j);
      a(i - 1, j - 1) = v;
      a(j - 1, i - 1) = v;
    }
  return a;
}

std::vector<std::vector<int>> components(const neighbor_graph& g) {
  std::vector<int> label(static_cast<std::size_t>(g.d), -1);
  std::vector<std::vector<int>> out;
  std::vector<int> queue;
  for (int i = 1; i <= g.d; ++i) {
    if (label[static_cast<std::size_t>(i - 1)] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    queue.clear();
    queue.push_back(i);
    label[static_cast<std::size_t>(i - 1)] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      out[static_cast<std::size_t>(id)].push_back(u);
      for (int v : g.set(u)) {
        if (label[static_cast<std::size_t>(v - 1)] >= 0) continue;
        label[static_cast<std::size_t>(v - 1)] = id;
        queue.push_back(v);
      }
    }
  }
  for (auto& comp : out) std::sort(comp.begin(), comp.end());
  return out;
}

bool connected(const neighbor_graph& g) { return components(g).size() == 1; }

}  // namespace dyapack
