#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dyapack/neighbor.hpp"
#include "dyapack/permutation.hpp"

namespace dyapack {

// Greedy anchor-row selection: a breadth-first sphere decomposition around a
// seed row, then per sphere a maximal set of rows whose neighborhoods tile
// the previous sphere.  members are in selection order; sphere_of_row[i] is
// the graph distance of row i+1 from the seed.
struct skeleton {
  std::vector<int> members;
  std::vector<int> sphere_of_row;

  int sphere_of_member(int z) const {
    return sphere_of_row[static_cast<std::size_t>(
        members[static_cast<std::size_t>(z)] - 1)];
  }
};

skeleton skeleton_select(const neighbor_graph& g, std::uint64_t seed,
                         std::optional<int> forced_seed_row = std::nullopt);

// One-dimensional classical scaling of a local distance matrix: double
// centering, then power iteration for the dominant eigenpair.  Throws
// degenerate_configuration when no direction carries positive spread.
Eigen::VectorXd local_mds(const Eigen::MatrixXd& distances);

// A global line layout assembled from per-member local layouts.
struct configuration {
  Eigen::VectorXd x;           // coordinate per row (0 where undefined)
  std::vector<char> defined;   // whether row i+1 received a coordinate
  Eigen::MatrixXd aligned;     // per-member columns after sign/shift fitting
};

// Sequentially reflects and translates each member's local layout onto the
// overlap with the layouts fitted before it (members whose sphere differs by
// more than 2 cannot overlap and are skipped up front).
configuration align_configurations(const Eigen::MatrixXd& local_coords,
                                   const skeleton& skel,
                                   const neighbor_graph& g);

// ranks of the coordinates; ties broken by original index, ascending
permutation configuration_to_permutation(const configuration& c);

// Diagnostics of a relabeling against a symmetric structure.  reach[i] is
// the farthest relabeled distance of a structural neighbor of row i.
struct packing_report {
  std::vector<int> reach;           // l_i, one per original row
  std::int64_t reach_total = 0;     // sum of l_i
  int half_bandwidth = 0;           // max l_i
  std::vector<double> efficiency;   // |D_i| / (2 l_i + 1)
  double efficiency_mean = 0.0;
  double fill = 0.0;                // band occupancy of the s-step closure
  int fill_order = 1;               // the s used for fill
  double delta = 0.0;               // mean banded approximation error
  int delta_order = 0;              // the m used for delta
};

// fill compares the s-step closure's nonzero count against the capacity of
// the band of half-width s * half_bandwidth around the relabeled diagonal;
// delta averages |G - A| over pairs with relabeled distance <= m (m = 0
// means m = d)
packing_report packing_stats(const Eigen::MatrixXd& sigma,
                             const permutation& p, int m = 0, int s = 1);

// banded approximation error between the relabeled distance |p(i) - p(j)|
// and the neighborhood-overlap distance, averaged over pairs within m
double banded_distance_error(const Eigen::MatrixXd& relabel_dist,
                             const Eigen::MatrixXd& overlap_dist, int m);

// Bound diagnostics: the mean-error functional, its closed-form bound, the
// boundary-discounted bound for a band of half-width m, and the per-pair
// bound on |G - A| for pairs satisfying the overlap premise.
struct bounds_report {
  double delta_full = 0.0;       // delta_d
  double q_value = 0.0;          // closed-form bound on delta_d
  double delta_m = 0.0;
  double prop_bound_m = 0.0;     // boundary-discounted bound on delta_m
  int qualifying_pairs = 0;      // pairs satisfying the premise
  int pair_violations = 0;       // premise pairs with |G - A| above the bound
  double min_pair_slack = 0.0;   // tightest bound - |G - A| over those pairs
};

bounds_report approximation_bounds(const Eigen::MatrixXd& sigma,
                                   const permutation& p, int m);

struct pack_result {
  permutation perm;
  packing_report report;
  skeleton skel;
  Eigen::VectorXd config;
};

// Full pipeline: s-step neighborhoods, skeleton, local one-dimensional
// layouts, alignment, ranking.  tolerate_degenerate substitutes an all-zero
// local layout when a member's distances carry no spread (used by the
// recursive driver); otherwise the error propagates.
pack_result pack(const Eigen::MatrixXd& sigma, int order, std::uint64_t seed,
                 bool tolerate_degenerate = false);

// inverse problem: recover the relabeling (up to reversal) from its distance
// matrix |p(i) - p(j)|
permutation reconstruct_from_distance(const Eigen::MatrixXd& g);

// nearest-neighbor summary of a set of distinct points on the line: each
// index's immediate neighbors and their distances, plus the two extremes
struct nn_summary {
  int d = 0;
  std::pair<int, int> extremes{0, 0};
  std::vector<std::vector<std::pair<int, double>>> adjacent;
};

nn_summary nearest_neighbor_info(const Eigen::MatrixXd& gx);

// reproduces coordinates (up to shift and reflection) from the summary by
// walking the neighbor chain from one extreme
Eigen::VectorXd reconstruct_points(const nn_summary& info);

// Nested-cross detection: pack, scan the middle third of cut positions for
// the smallest vertex set covering all structural edges across the cut, and
// recurse on both sides when that separator is small enough.
struct separator_node {
  std::vector<int> rows;       // original row labels handled by this node
  std::vector<int> separator;  // empty for leaves
  std::unique_ptr<separator_node> low;
  std::unique_ptr<separator_node> high;
};

struct recursive_pack_result {
  permutation perm;
  std::unique_ptr<separator_node> tree;
};

recursive_pack_result recursive_dyadic_pack(const Eigen::MatrixXd& sigma,
                                            int max_depth, std::uint64_t seed);

}  // namespace dyapack
