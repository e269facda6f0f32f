#include "dyapack/packing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "dyapack/errors.hpp"
#include "dyapack/parallel.hpp"
#include "dyapack/rng.hpp"

namespace dyapack {

namespace {

std::vector<int> sorted_difference(const std::vector<int>& a,
                                   const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

}  // namespace

skeleton skeleton_select(const neighbor_graph& g, std::uint64_t seed,
                         std::optional<int> forced_seed_row) {
  const int d = g.d;
  xoshiro256pp rng(seed, stream::skeleton);
  int seed_row = forced_seed_row ? *forced_seed_row : rng.uniform_int(d) + 1;
  if (seed_row < 1 || seed_row > d)
    fail(errc::range_error, "seed row out of range");

  // breadth-first spheres around the seed row
  std::vector<int> sphere(static_cast<std::size_t>(d), -1);
  std::vector<std::vector<int>> layers;
  sphere[static_cast<std::size_t>(seed_row - 1)] = 0;
  layers.push_back({seed_row});
  while (true) {
    std::vector<int> next;
    for (int u : layers.back())
      for (int v : g.set(u))
        if (sphere[static_cast<std::size_t>(v - 1)] < 0) {
          sphere[static_cast<std::size_t>(v - 1)] =
              static_cast<int>(layers.size());
          next.push_back(v);
        }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    layers.push_back(std::move(next));
  }

  std::vector<int> unreachable;
  for (int i = 1; i <= d; ++i)
    if (sphere[static_cast<std::size_t>(i - 1)] < 0) unreachable.push_back(i);
  if (!unreachable.empty())
    throw disconnected_error(
        "anchor selection cannot reach " +
            std::to_string(unreachable.size()) + " of " + std::to_string(d) +
            " rows from row " + std::to_string(seed_row),
        components(g));

  skeleton out;
  out.members.push_back(seed_row);
  out.sphere_of_row = std::move(sphere);

  for (std::size_t r = 2; r < layers.size(); ++r) {
    // rows of sphere r still in need of an anchor in sphere r-1
    std::vector<int> open = layers[r];
    while (!open.empty()) {
      const int j = open[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(open.size())))];
      // largest neighborhoods among j's contacts one sphere closer in
      int best = -1;
      std::vector<int> arg;
      for (int a : g.set(j)) {
        if (out.sphere_of_row[static_cast<std::size_t>(a - 1)] !=
            static_cast<int>(r) - 1)
          continue;
        const int size = g.set_size(a);
        if (size > best) {
          best = size;
          arg.assign(1, a);
        } else if (size == best) {
          arg.push_back(a);
        }
      }
      if (arg.empty())
        fail(errc::internal_inconsistency,
             "sphere row lost its inward contact");
      const int chosen = arg[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(arg.size())))];
      out.members.push_back(chosen);
      open = sorted_difference(open, g.set(chosen));
    }
  }
  return out;
}

Eigen::VectorXd local_mds(const Eigen::MatrixXd& distances) {
  if (distances.rows() != distances.cols())
    fail(errc::dimension_mismatch, "distance matrix must be square");
  const int m = static_cast<int>(distances.rows());
  if (m < 1) fail(errc::range_error, "distance matrix must be at least 1 x 1");
  for (int i = 0; i < m; ++i) {
    if (distances(i, i) != 0.0)
      fail(errc::range_error, "distances must vanish on the diagonal");
    for (int j = i + 1; j < m; ++j) {
      if (distances(i, j) != distances(j, i))
        fail(errc::range_error, "distances must be symmetric");
      if (distances(i, j) < 0.0)
        fail(errc::range_error, "distances must be nonnegative");
    }
  }
  if (m == 1) return Eigen::VectorXd::Zero(1);

  // double centering of the squared distances
  const Eigen::MatrixXd k2 = distances.array().square();
  const Eigen::VectorXd rm = k2.rowwise().mean();
  const double gm = k2.mean();
  Eigen::MatrixXd b = -0.5 * k2;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) b(i, j) += 0.5 * (rm(i) + rm(j) - gm);

  const double bnorm = b.cwiseAbs().rowwise().sum().maxCoeff();
  if (bnorm == 0.0)
    fail(errc::degenerate_configuration,
         "all local distances are zero; no spread to lay out");

  // shift by the Gershgorin floor: just enough to make b + shift I positive
  // semidefinite so the leading eigenvalue dominates in magnitude, without
  // compressing the spectral gap the way a norm-sized shift would
  double floor_bound = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double off = b.row(i).cwiseAbs().sum() - std::abs(b(i, i));
    floor_bound = std::min(floor_bound, b(i, i) - off);
  }
  const double shift = std::max(0.0, -floor_bound);

  // fixed low-discrepancy start, centered so no mass wastes on the constant
  // vector that b annihilates; an integer ramp is a poor choice here because
  // it lands exactly orthogonal to the leading eigenvector whenever the local
  // geometry is itself a permuted ramp
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) {
    const double t = (i + 1) * 0.6180339887498949;
    v(i) = t - std::floor(t);
  }
  v.array() -= v.mean();
  v /= v.norm();
  const int cap = 10 * m;
  for (int iter = 0; iter < cap; ++iter) {
    Eigen::VectorXd w = b * v + shift * v;
    const double wn = w.norm();
    if (wn <= 1e-300)
      fail(errc::degenerate_configuration,
           "power iteration collapsed; no dominant direction");
    v = w / wn;
    // stop on the eigenpair residual rather than the Rayleigh increment; the
    // quotient settles long before the direction does
    w = b * v + shift * v;
    const double rayleigh = v.dot(w);
    if ((w - rayleigh * v).norm() <= 1e-12 * std::max(1.0, rayleigh)) break;
  }
  const double lambda = v.dot(b * v);
  if (lambda <= 1e-14 * std::max(1.0, bnorm))
    fail(errc::degenerate_configuration,
         "leading eigenvalue is not positive; the layout is degenerate");
  Eigen::VectorXd x = std::sqrt(lambda) * v;
  // canonical sign: the largest-magnitude coordinate is positive
  int pivot = 0;
  for (int i = 1; i < m; ++i)
    if (std::abs(x(i)) > std::abs(x(pivot))) pivot = i;
  if (x(pivot) < 0.0) x = -x;
  return x;
}

configuration align_configurations(const Eigen::MatrixXd& local_coords,
                                   const skeleton& skel,
                                   const neighbor_graph& g) {
  const int d = g.d;
  const int members = static_cast<int>(skel.members.size());
  if (local_coords.rows() != d || local_coords.cols() != members)
    fail(errc::dimension_mismatch,
         "local coordinates must have one column per skeleton member");
  if (static_cast<int>(skel.sphere_of_row.size()) != d)
    fail(errc::dimension_mismatch, "skeleton does not match the graph");

  configuration out;
  out.aligned = Eigen::MatrixXd::Zero(d, members);
  out.aligned.col(0) = local_coords.col(0);

  for (int z = 1; z < members; ++z) {
    const int row_z = skel.members[static_cast<std::size_t>(z)];
    const int sphere_z = skel.sphere_of_member(z);
    // overlaps with the members already placed; spheres more than two apart
    // cannot intersect the current neighborhood
    double sum_t = 0.0, sum_y = 0.0;
    long n_tot = 0;
    for (int mprev = 0; mprev < z; ++mprev) {
      if (std::abs(skel.sphere_of_member(mprev) - sphere_z) > 2) continue;
      const int row_m = skel.members[static_cast<std::size_t>(mprev)];
      for (int a : g.set(row_m)) {
        if (!g.adjacent(row_z, a)) continue;
        sum_t += out.aligned(a - 1, mprev);
        sum_y += local_coords(a - 1, z);
        ++n_tot;
      }
    }
    if (n_tot == 0)
      fail(errc::alignment_impossible,
           "member row " + std::to_string(row_z) +
               " shares no rows with the members placed before it");
    const double mean_t = sum_t / static_cast<double>(n_tot);
    const double mean_y = sum_y / static_cast<double>(n_tot);
    double cov = 0.0;
    for (int mprev = 0; mprev < z; ++mprev) {
      if (std::abs(skel.sphere_of_member(mprev) - sphere_z) > 2) continue;
      const int row_m = skel.members[static_cast<std::size_t>(mprev)];
      for (int a : g.set(row_m)) {
        if (!g.adjacent(row_z, a)) continue;
        cov += (out.aligned(a - 1, mprev) - mean_t) *
               (local_coords(a - 1, z) - mean_y);
      }
    }
    const double sign = cov < 0.0 ? -1.0 : 1.0;
    const double offset = (sum_t - sign * sum_y) / static_cast<double>(n_tot);
    for (int a : g.set(row_z))
      out.aligned(a - 1, z) = sign * local_coords(a - 1, z) + offset;
  }

  out.x = Eigen::VectorXd::Zero(d);
  out.defined.assign(static_cast<std::size_t>(d), 0);
  for (int i = 1; i <= d; ++i) {
    double acc = 0.0;
    int count = 0;
    for (int z = 0; z < members; ++z) {
      if (!g.adjacent(skel.members[static_cast<std::size_t>(z)], i)) continue;
      acc += out.aligned(i - 1, z);
      ++count;
    }
    if (count > 0) {
      out.x(i - 1) = acc / static_cast<double>(count);
      out.defined[static_cast<std::size_t>(i - 1)] = 1;
    }
  }
  return out;
}

permutation configuration_to_permutation(const configuration& c) {
  const int d = static_cast<int>(c.x.size());
  for (int i = 0; i < d; ++i)
    if (!c.defined[static_cast<std::size_t>(i)])
      fail(errc::incomplete_configuration,
           "row " + std::to_string(i + 1) + " never received a coordinate");
  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return c.x(a) < c.x(b); });
  std::vector<int> image(static_cast<std::size_t>(d));
  for (int pos = 0; pos < d; ++pos)
    image[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] =
        pos + 1;
  return permutation::from_image(std::move(image));
}

double banded_distance_error(const Eigen::MatrixXd& relabel_dist,
                             const Eigen::MatrixXd& overlap_dist, int m) {
  if (relabel_dist.rows() != relabel_dist.cols() ||
      overlap_dist.rows() != overlap_dist.cols() ||
      relabel_dist.rows() != overlap_dist.rows())
    fail(errc::dimension_mismatch, "distance matrices differ in shape");
  const int d = static_cast<int>(relabel_dist.rows());
  if (m < 1) fail(errc::range_error, "band half-width must be >= 1");
  double acc = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (relabel_dist(i, j) <= m)
        acc += std::abs(relabel_dist(i, j) - overlap_dist(i, j));
  return acc / (static_cast<double>(d) * static_cast<double>(m));
}

packing_report packing_stats(const Eigen::MatrixXd& sigma,
                             const permutation& p, int m, int s) {
  if (s < 1) fail(errc::range_error, "closure order must be >= 1");
  if (m < 0) fail(errc::range_error, "band half-width must be >= 0");
  const neighbor_graph g1 = neighborhoods(sigma);
  const int d = g1.d;
  if (p.size() != d)
    fail(errc::dimension_mismatch, "permutation does not match the matrix");

  packing_report rep;
  rep.reach.assign(static_cast<std::size_t>(d), 0);
  rep.efficiency.assign(static_cast<std::size_t>(d), 0.0);
  for (int i = 1; i <= d; ++i) {
    int reach = 0;
    for (int j : g1.set(i)) reach = std::max(reach, std::abs(p(i) - p(j)));
    rep.reach[static_cast<std::size_t>(i - 1)] = reach;
    rep.reach_total += reach;
    rep.half_bandwidth = std::max(rep.half_bandwidth, reach);
    rep.efficiency[static_cast<std::size_t>(i - 1)] =
        static_cast<double>(g1.set_size(i)) / static_cast<double>(2 * reach + 1);
    rep.efficiency_mean += rep.efficiency[static_cast<std::size_t>(i - 1)];
  }
  rep.efficiency_mean /= static_cast<double>(d);

  rep.fill_order = s;
  const neighbor_graph* gs = &g1;
  t_order_result closure;
  if (s > 1) {
    closure = t_order(g1, s);
    gs = &closure.graph;
  }
  std::int64_t numer = 0;
  std::int64_t denom = 0;
  const std::int64_t halfw =
      static_cast<std::int64_t>(s) * static_cast<std::int64_t>(rep.half_bandwidth);
  for (int i = 1; i <= d; ++i) {
    numer += gs->set_size(i);
    const std::int64_t pos = p(i);
    const std::int64_t lo = std::max<std::int64_t>(1, pos - halfw);
    const std::int64_t hi = std::min<std::int64_t>(d, pos + halfw);
    denom += hi - lo + 1;
  }
  rep.fill = static_cast<double>(numer) / static_cast<double>(denom);

  rep.delta_order = m == 0 ? d : m;
  Eigen::MatrixXd gp(d, d);
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) gp(i - 1, j - 1) = std::abs(p(i) - p(j));
  rep.delta = banded_distance_error(gp, symm_diff_distance(g1), rep.delta_order);
  return rep;
}

bounds_report approximation_bounds(const Eigen::MatrixXd& sigma,
                                   const permutation& p, int m) {
  const neighbor_graph g1 = neighborhoods(sigma);
  const int d = g1.d;
  if (p.size() != d)
    fail(errc::dimension_mismatch, "permutation does not match the matrix");
  if (m < 1 || m > d)
    fail(errc::range_error, "band half-width must be in 1.." + std::to_string(d));

  const Eigen::MatrixXd a = symm_diff_distance(g1);
  Eigen::MatrixXd gp(d, d);
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) gp(i - 1, j - 1) = std::abs(p(i) - p(j));

  std::vector<int> reach(static_cast<std::size_t>(d), 0);
  std::int64_t reach_total = 0;
  std::int64_t size_total = 0;
  for (int i = 1; i <= d; ++i) {
    int r = 0;
    for (int j : g1.set(i)) r = std::max(r, std::abs(p(i) - p(j)));
    reach[static_cast<std::size_t>(i - 1)] = r;
    reach_total += r;
    size_total += g1.set_size(i);
  }

  bounds_report rep;
  const double dd = static_cast<double>(d);
  rep.delta_full = banded_distance_error(gp, a, d);
  rep.q_value = 2.0 * (dd - 1.0) / (dd * dd) * static_cast<double>(reach_total) +
                (dd - 1.0) / (dd * dd) *
                    (dd - static_cast<double>(size_total));
  rep.delta_m = banded_distance_error(gp, a, m);

  // boundary-discounted bound: rows relabeled near either end contribute a
  // discount proportional to how deep into the margin they sit
  double discount = 0.0;
  for (int i = 1; i <= d; ++i) {
    const int pos = p(i);
    const double spare =
        2.0 * reach[static_cast<std::size_t>(i - 1)] + 1.0 -
        static_cast<double>(g1.set_size(i));
    if (pos <= m)
      discount += (static_cast<double>(m + 1 - pos) / static_cast<double>(m)) *
                  spare;
    if (pos >= d - m + 1)
      discount += (static_cast<double>(m - d + pos) / static_cast<double>(m)) *
                  spare;
  }
  double sum_one_minus_size = 0.0;
  for (int i = 1; i <= d; ++i)
    sum_one_minus_size += 1.0 - static_cast<double>(g1.set_size(i));
  rep.prop_bound_m = 4.0 / dd * static_cast<double>(reach_total) +
                     2.0 / dd * sum_one_minus_size - discount / dd;

  rep.min_pair_slack = 0.0;
  bool have_pair = false;
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j) {
      const int li = reach[static_cast<std::size_t>(i - 1)];
      const int lj = reach[static_cast<std::size_t>(j - 1)];
      const double gij = gp(i - 1, j - 1);
      if (gij < std::abs(li - lj) || gij > li + lj) continue;
      ++rep.qualifying_pairs;
      const double bound =
          0.5 * ((2.0 * li + 1.0 - g1.set_size(i)) +
                 (2.0 * lj + 1.0 - g1.set_size(j)));
      const double err = std::abs(gij - a(i - 1, j - 1));
      const double slack = bound - err;
      if (slack < -1e-9) ++rep.pair_violations;
      if (!have_pair || slack < rep.min_pair_slack) {
        rep.min_pair_slack = slack;
        have_pair = true;
      }
    }
  return rep;
}

pack_result pack(const Eigen::MatrixXd& sigma, int order, std::uint64_t seed,
                 bool tolerate_degenerate) {
  if (order < 1) fail(errc::range_error, "closure order must be >= 1");
  const neighbor_graph g1 = neighborhoods(sigma);
  {
    auto comps = components(g1);
    const std::size_t n = comps.size();
    if (n > 1)
      throw disconnected_error(
          "structure splits into " + std::to_string(n) +
              " components; pack each component separately",
          std::move(comps));
  }
  t_order_result closure;
  const neighbor_graph* gt = &g1;
  if (order > 1) {
    closure = t_order(g1, order);
    gt = &closure.graph;
  }

  pack_result out{permutation(g1.d), packing_report{}, skeleton{},
                  Eigen::VectorXd()};
  out.skel = skeleton_select(*gt, seed);
  const int members = static_cast<int>(out.skel.members.size());
  Eigen::MatrixXd local = Eigen::MatrixXd::Zero(g1.d, members);
  parallel_for(members, [&](int z) {
    const int row = out.skel.members[static_cast<std::size_t>(z)];
    const auto& set = gt->set(row);
    const int msize = static_cast<int>(set.size());
    Eigen::MatrixXd dist(msize, msize);
    for (int a = 0; a < msize; ++a) {
      dist(a, a) = 0.0;
      for (int b = a + 1; b < msize; ++b) {
        const double v = 0.5 * gt->symm_diff_size(set[static_cast<std::size_t>(a)],
                                                  set[static_cast<std::size_t>(b)]);
        dist(a, b) = v;
        dist(b, a) = v;
      }
    }
    Eigen::VectorXd coords;
    try {
      coords = local_mds(dist);
    } catch (const error& e) {
      if (tolerate_degenerate && e.code() == errc::degenerate_configuration)
        coords = Eigen::VectorXd::Zero(msize);
      else
        throw;
    }
    for (int a = 0; a < msize; ++a)
      local(set[static_cast<std::size_t>(a)] - 1, z) = coords(a);
  });

  configuration conf = align_configurations(local, out.skel, *gt);
  out.perm = configuration_to_permutation(conf);
  out.config = conf.x;
  out.report = packing_stats(sigma, out.perm, 0, order);
  return out;
}

permutation reconstruct_from_distance(const Eigen::MatrixXd& g) {
  if (g.rows() != g.cols())
    fail(errc::dimension_mismatch, "distance matrix must be square");
  const int d = static_cast<int>(g.rows());
  if (d < 1) fail(errc::range_error, "matrix must be at least 1 x 1");

  auto entry = [&](int i, int j) -> long long {
    const double v = g(i - 1, j - 1);
    const long long r = std::llround(v);
    if (std::abs(v - static_cast<double>(r)) > 1e-9 || r < 0)
      fail(errc::not_permutation_metric,
           "entry (" + std::to_string(i) + ", " + std::to_string(j) +
               ") is not a nonnegative integer");
    return r;
  };

  if (d == 1) {
    if (entry(1, 1) != 0)
      fail(errc::not_permutation_metric, "diagonal must be zero");
    return permutation(1);
  }

  std::vector<int> ends;
  for (int i = 1; i <= d; ++i) {
    int unit = 0;
    for (int j = 1; j <= d; ++j)
      if (j != i && entry(i, j) == 1) ++unit;
    if (unit == 1) ends.push_back(i);
  }
  if (ends.size() != 2)
    fail(errc::not_permutation_metric,
         "expected exactly two rows with a single unit distance, found " +
             std::to_string(ends.size()));

  std::vector<int> image(static_cast<std::size_t>(d), 0);
  std::vector<char> used(static_cast<std::size_t>(d), 0);
  int cur = ends[0];
  image[static_cast<std::size_t>(cur - 1)] = 1;
  used[static_cast<std::size_t>(cur - 1)] = 1;
  for (int pos = 2; pos <= d; ++pos) {
    int next = 0;
    for (int j = 1; j <= d; ++j) {
      if (used[static_cast<std::size_t>(j - 1)] || j == cur) continue;
      if (entry(cur, j) != 1) continue;
      if (next != 0)
        fail(errc::not_permutation_metric,
             "row " + std::to_string(cur) + " has two unused unit neighbors");
      next = j;
    }
    if (next == 0)
      fail(errc::not_permutation_metric,
           "walk stopped after " + std::to_string(pos - 1) + " of " +
               std::to_string(d) + " rows");
    image[static_cast<std::size_t>(next - 1)] = pos;
    used[static_cast<std::size_t>(next - 1)] = 1;
    cur = next;
  }

  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) {
      const long long want = std::llabs(
          static_cast<long long>(image[static_cast<std::size_t>(i - 1)]) -
          static_cast<long long>(image[static_cast<std::size_t>(j - 1)]));
      if (entry(i, j) != want)
        fail(errc::not_permutation_metric,
             "distances are inconsistent with any relabeling at (" +
                 std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  return permutation::from_image(std::move(image));
}

nn_summary nearest_neighbor_info(const Eigen::MatrixXd& gx) {
  if (gx.rows() != gx.cols())
    fail(errc::dimension_mismatch, "distance matrix must be square");
  const int d = static_cast<int>(gx.rows());
  if (d < 1) fail(errc::range_error, "matrix must be at least 1 x 1");

  nn_summary out;
  out.d = d;
  out.adjacent.assign(static_cast<std::size_t>(d), {});
  if (d == 1) {
    if (gx(0, 0) != 0.0)
      fail(errc::reconstruction_failed, "diagonal must be zero");
    out.extremes = {1, 1};
    return out;
  }
  for (int i = 0; i < d; ++i) {
    if (gx(i, i) != 0.0)
      fail(errc::reconstruction_failed, "diagonal must be zero");
    for (int j = i + 1; j < d; ++j) {
      if (gx(i, j) != gx(j, i))
        fail(errc::reconstruction_failed, "distances must be symmetric");
      if (!(gx(i, j) > 0.0))
        fail(errc::reconstruction_failed, "points must be pairwise distinct");
    }
  }

  // i and j are chain neighbors when nothing sits strictly between them
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j) {
      bool blocked = false;
      for (int m = 1; m <= d && !blocked; ++m) {
        if (m == i || m == j) continue;
        if (std::max(gx(i - 1, m - 1), gx(j - 1, m - 1)) < gx(i - 1, j - 1))
          blocked = true;
      }
      if (!blocked) {
        out.adjacent[static_cast<std::size_t>(i - 1)].emplace_back(
            j, gx(i - 1, j - 1));
        out.adjacent[static_cast<std::size_t>(j - 1)].emplace_back(
            i, gx(i - 1, j - 1));
      }
    }

  std::vector<int> single;
  for (int i = 1; i <= d; ++i) {
    const auto count = out.adjacent[static_cast<std::size_t>(i - 1)].size();
    if (count == 1) single.push_back(i);
    if (count < 1 || count > 2)
      fail(errc::reconstruction_failed,
           "row " + std::to_string(i) + " has " + std::to_string(count) +
               " chain neighbors");
  }
  if (single.size() != 2)
    fail(errc::reconstruction_failed,
         "expected exactly two chain extremes, found " +
             std::to_string(single.size()));
  out.extremes = {single[0], single[1]};
  return out;
}

Eigen::VectorXd reconstruct_points(const nn_summary& info) {
  const int d = info.d;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  if (d == 1) return y;
  std::vector<char> used(static_cast<std::size_t>(d), 0);
  int cur = info.extremes.first;
  used[static_cast<std::size_t>(cur - 1)] = 1;
  double coord = 0.0;
  for (int step = 1; step < d; ++step) {
    int next = 0;
    double gap = 0.0;
    for (const auto& [j, dist] : info.adjacent[static_cast<std::size_t>(cur - 1)]) {
      if (used[static_cast<std::size_t>(j - 1)]) continue;
      if (next != 0)
        fail(errc::reconstruction_failed,
             "chain forks at row " + std::to_string(cur));
      next = j;
      gap = dist;
    }
    if (next == 0)
      fail(errc::reconstruction_failed,
           "chain ends after " + std::to_string(step) + " of " +
               std::to_string(d) + " rows");
    coord += gap;
    y(next - 1) = coord;
    used[static_cast<std::size_t>(next - 1)] = 1;
    cur = next;
  }
  return y;
}

namespace {

// König cover of the crossing edges: maximum matching via augmenting paths,
// then the standard alternating reachability construction.
struct bipartite_cover {
  std::vector<int> left_rows;   // local row labels on each side
  std::vector<int> right_rows;
  std::vector<int> cover_rows;  // subset of left_rows + right_rows
};

bool kuhn_augment(int u, const std::vector<std::vector<int>>& adj,
                  std::vector<char>& seen, std::vector<int>& match_l,
                  std::vector<int>& match_r) {
  for (int v : adj[static_cast<std::size_t>(u)]) {
    if (seen[static_cast<std::size_t>(v)]) continue;
    seen[static_cast<std::size_t>(v)] = 1;
    if (match_r[static_cast<std::size_t>(v)] < 0 ||
        kuhn_augment(match_r[static_cast<std::size_t>(v)], adj, seen, match_l,
                     match_r)) {
      match_l[static_cast<std::size_t>(u)] = v;
      match_r[static_cast<std::size_t>(v)] = u;
      return true;
    }
  }
  return false;
}

bipartite_cover min_vertex_cover(
    const std::vector<std::pair<int, int>>& edges) {
  bipartite_cover out;
  for (const auto& [a, b] : edges) {
    out.left_rows.push_back(a);
    out.right_rows.push_back(b);
  }
  auto dedupe = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(out.left_rows);
  dedupe(out.right_rows);

  auto index_of = [](const std::vector<int>& v, int x) {
    return static_cast<int>(std::lower_bound(v.begin(), v.end(), x) -
                            v.begin());
  };
  const int nl = static_cast<int>(out.left_rows.size());
  const int nr = static_cast<int>(out.right_rows.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nl));
  for (const auto& [a, b] : edges)
    adj[static_cast<std::size_t>(index_of(out.left_rows, a))].push_back(
        index_of(out.right_rows, b));
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }

  std::vector<int> match_l(static_cast<std::size_t>(nl), -1);
  std::vector<int> match_r(static_cast<std::size_t>(nr), -1);
  for (int u = 0; u < nl; ++u) {
    std::vector<char> seen(static_cast<std::size_t>(nr), 0);
    kuhn_augment(u, adj, seen, match_l, match_r);
  }

  // alternating reachability from the unmatched left vertices
  std::vector<char> vis_l(static_cast<std::size_t>(nl), 0);
  std::vector<char> vis_r(static_cast<std::size_t>(nr), 0);
  std::vector<int> queue;
  for (int u = 0; u < nl; ++u)
    if (match_l[static_cast<std::size_t>(u)] < 0) {
      vis_l[static_cast<std::size_t>(u)] = 1;
      queue.push_back(u);
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (vis_r[static_cast<std::size_t>(v)]) continue;
      vis_r[static_cast<std::size_t>(v)] = 1;
      const int w = match_r[static_cast<std::size_t>(v)];
      if (w >= 0 && !vis_l[static_cast<std::size_t>(w)]) {
        vis_l[static_cast<std::size_t>(w)] = 1;
        queue.push_back(w);
      }
    }
  }
  for (int u = 0; u < nl; ++u)
    if (!vis_l[static_cast<std::size_t>(u)])
      out.cover_rows.push_back(out.left_rows[static_cast<std::size_t>(u)]);
  for (int v = 0; v < nr; ++v)
    if (vis_r[static_cast<std::size_t>(v)])
      out.cover_rows.push_back(out.right_rows[static_cast<std::size_t>(v)]);
  std::sort(out.cover_rows.begin(), out.cover_rows.end());
  return out;
}

struct node_build {
  std::unique_ptr<separator_node> node;
  std::vector<int> order;  // original labels, packed order
};

Eigen::MatrixXd induced(const Eigen::MatrixXd& m,
                        const std::vector<int>& rows) {
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      out(a, b) = m(rows[static_cast<std::size_t>(a)] - 1,
                    rows[static_cast<std::size_t>(b)] - 1);
  return out;
}

// rows: original labels in this node's incoming order
node_build build_separator_tree(const Eigen::MatrixXd& sigma,
                                const std::vector<int>& rows, int depth,
                                int max_depth, std::uint64_t seed,
                                std::uint64_t tag) {
  node_build out;
  out.node = std::make_unique<separator_node>();
  out.node->rows = rows;
  const int dsub = static_cast<int>(rows.size());
  out.order = rows;
  if (dsub <= 2) return out;

  const Eigen::MatrixXd sub = induced(sigma, rows);
  pack_result packed;
  neighbor_graph g1;
  try {
    g1 = neighborhoods(sub);
    if (!connected(g1)) return out;
    // two-step closures that already swallow nearly everything mean the
    // one-step metric is the informative one
    const t_order_result two = t_order(g1, 2);
    double mean2 = 0.0;
    for (int i = 1; i <= dsub; ++i) mean2 += two.graph.set_size(i);
    mean2 /= static_cast<double>(dsub);
    const int order = mean2 >= 0.95 * static_cast<double>(dsub) ? 1 : 2;
    xoshiro256pp derive(seed, stream::with_attempt(stream::recursive_node, tag));
    packed = pack(sub, order, derive.next(), /*tolerate_degenerate=*/true);
  } catch (const error&) {
    return out;  // no usable layout at this node: keep the incoming order
  }

  // local label at each packed position
  const permutation pos_of = packed.perm;
  std::vector<int> at_pos(static_cast<std::size_t>(dsub));
  for (int i = 1; i <= dsub; ++i)
    at_pos[static_cast<std::size_t>(pos_of(i) - 1)] = i;
  std::vector<int> packed_order(static_cast<std::size_t>(dsub));
  for (int p = 0; p < dsub; ++p)
    packed_order[static_cast<std::size_t>(p)] =
        rows[static_cast<std::size_t>(at_pos[static_cast<std::size_t>(p)] - 1)];
  out.order = packed_order;
  if (depth >= max_depth) return out;

  std::vector<std::pair<int, int>> edges;  // local labels, i < j
  for (int i = 1; i <= dsub; ++i)
    for (int j : g1.set(i))
      if (j > i) edges.emplace_back(i, j);

  const int lo = (dsub + 2) / 3;
  const int hi = (2 * dsub) / 3;
  int best_cut = -1;
  std::vector<int> best_cover;
  for (int c = lo; c <= hi; ++c) {
    std::vector<std::pair<int, int>> crossing;
    for (const auto& [i, j] : edges) {
      const int pi = pos_of(i);
      const int pj = pos_of(j);
      const int plo = std::min(pi, pj);
      const int phi = std::max(pi, pj);
      if (plo <= c && phi > c)
        crossing.emplace_back(pi <= c ? i : j, pi <= c ? j : i);
    }
    if (crossing.empty()) continue;
    auto cover = min_vertex_cover(crossing);
    // the separator must leave something on both sides
    int left_rest = 0, right_rest = 0;
    std::vector<char> in_cover(static_cast<std::size_t>(dsub) + 1, 0);
    for (int r : cover.cover_rows) in_cover[static_cast<std::size_t>(r)] = 1;
    for (int i = 1; i <= dsub; ++i) {
      if (in_cover[static_cast<std::size_t>(i)]) continue;
      if (pos_of(i) <= c)
        ++left_rest;
      else
        ++right_rest;
    }
    if (left_rest == 0 || right_rest == 0) continue;
    const bool better =
        best_cut < 0 || cover.cover_rows.size() < best_cover.size() ||
        (cover.cover_rows.size() == best_cover.size() &&
         (std::abs(2 * c - (dsub + 1)) < std::abs(2 * best_cut - (dsub + 1)) ||
          (std::abs(2 * c - (dsub + 1)) ==
               std::abs(2 * best_cut - (dsub + 1)) &&
           c < best_cut)));
    if (better) {
      best_cut = c;
      best_cover = std::move(cover.cover_rows);
    }
  }

  if (best_cut < 0 ||
      3 * static_cast<int>(best_cover.size()) > dsub)
    return out;  // no small separator: flat leaf with the packed order

  std::vector<char> in_cover(static_cast<std::size_t>(dsub) + 1, 0);
  for (int r : best_cover) in_cover[static_cast<std::size_t>(r)] = 1;
  std::vector<int> left_rows, right_rows, sep_rows;
  for (int p = 1; p <= dsub; ++p) {
    const int local = at_pos[static_cast<std::size_t>(p - 1)];
    const int original = rows[static_cast<std::size_t>(local - 1)];
    if (in_cover[static_cast<std::size_t>(local)])
      sep_rows.push_back(original);
    else if (p <= best_cut)
      left_rows.push_back(original);
    else
      right_rows.push_back(original);
  }

  auto low = build_separator_tree(sigma, left_rows, depth + 1, max_depth, seed,
                                  2 * tag);
  auto high = build_separator_tree(sigma, right_rows, depth + 1, max_depth,
                                   seed, 2 * tag + 1);
  out.node->separator = sep_rows;
  out.order.clear();
  out.order.insert(out.order.end(), low.order.begin(), low.order.end());
  out.order.insert(out.order.end(), sep_rows.begin(), sep_rows.end());
  out.order.insert(out.order.end(), high.order.begin(), high.order.end());
  out.node->low = std::move(low.node);
  out.node->high = std::move(high.node);
  return out;
}

}  // namespace

recursive_pack_result recursive_dyadic_pack(const Eigen::MatrixXd& sigma,
                                            int max_depth, std::uint64_t seed) {
  if (max_depth < 0) fail(errc::range_error, "depth cap must be >= 0");
  const neighbor_graph g1 = neighborhoods(sigma);
  {
    auto comps = components(g1);
    const std::size_t n = comps.size();
    if (n > 1)
      throw disconnected_error(
          "structure splits into " + std::to_string(n) +
              " components; pack each component separately",
          std::move(comps));
  }
  std::vector<int> rows(static_cast<std::size_t>(g1.d));
  for (int i = 0; i < g1.d; ++i) rows[static_cast<std::size_t>(i)] = i + 1;
  auto built = build_separator_tree(sigma, rows, 0, max_depth, seed, 1);

  std::vector<int> image(static_cast<std::size_t>(g1.d), 0);
  for (int p = 0; p < g1.d; ++p)
    image[static_cast<std::size_t>(built.order[static_cast<std::size_t>(p)] -
                                   1)] = p + 1;
  recursive_pack_result out;
  out.perm = permutation::from_image(std::move(image));
  out.tree = std::move(built.node);
  return out;
}

}  // namespace dyapack
