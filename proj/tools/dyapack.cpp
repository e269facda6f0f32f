// command-line driver: structure generation, factorization, inversion data,
// permutation packing, simulation sweeps, and flop-scaling benchmarks
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "dyapack/dyadic_matrix.hpp"
#include "dyapack/errors.hpp"
#include "dyapack/factor.hpp"
#include "dyapack/generators.hpp"
#include "dyapack/mm_io.hpp"
#include "dyapack/neighbor.hpp"
#include "dyapack/packing.hpp"
#include "dyapack/parallel.hpp"
#include "dyapack/permutation.hpp"
#include "dyapack/pyramid.hpp"
#include "dyapack/version.hpp"

namespace {

using namespace dyapack;

// ---------------------------------------------------------------------------
// small formatting helpers

std::string fmt_g(double v, int prec = 12) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Run provenance carried by every output: as %-comments in Matrix Market
// files, as '# manifest:' prelude lines in CSV reports, and as a .manifest
// sidecar next to permutation files (whose format has no comment syntax).
// Timestamps live only here, so the data sections reproduce byte-for-byte.
class manifest {
 public:
  manifest(const std::string& command, const std::vector<std::string>& argv) {
    add("tool", "dyapack");
    add("version", version_string);
    add("command", command);
    std::string joined;
    for (const auto& a : argv) {
      if (!joined.empty()) joined += ' ';
      joined += a;
    }
    add("argv", joined);
    add("timestamp", iso_now());
  }

  void add(const std::string& key, const std::string& value) {
    lines_.push_back(key + "=" + value);
  }
  void add_file(const std::string& role, const std::string& path) {
    add(role, path + " fnv1a:" + file_digest(path));
  }

  std::vector<std::string> mm_comments() const {
    std::vector<std::string> out;
    for (const auto& l : lines_) out.push_back("manifest: " + l);
    return out;
  }
  void write_sidecar(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(errc::io_error, "cannot write '" + path + "'");
    for (const auto& l : lines_) f << "manifest: " << l << "\n";
  }
  void write_csv_prelude(std::ostream& f) const {
    for (const auto& l : lines_) f << "# manifest: " << l << "\n";
  }

 private:
  std::vector<std::string> lines_;
};

void write_csv(const std::string& path, const manifest& man,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               const std::vector<std::string>& trailer = {}) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(errc::io_error, "cannot write '" + path + "'");
  man.write_csv_prelude(f);
  for (std::size_t c = 0; c < header.size(); ++c)
    f << (c ? "," : "") << csv_field(header[c]);
  f << "\r\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      f << (c ? "," : "") << csv_field(row[c]);
    f << "\r\n";
  }
  for (const auto& l : trailer) f << l << "\n";
  if (!f) fail(errc::io_error, "cannot write '" + path + "'");
}

std::uint64_t parse_seed_text(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(errc::range_error, what + " '" + s + "' is not a valid seed");
  }
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DYAPACK_SEED"))
    return parse_seed_text(env, "DYAPACK_SEED");
  return 0;
}

// ---------------------------------------------------------------------------
// structure plumbing shared by the matrix-consuming commands

// Decide the (N, k, kind) a dense input lives on: an explicit request wins,
// then the %%dyadic file header, then a support scan that prefers the largest
// breadth (equivalently the smallest height >= 2), then a single dense block.
mm_dyadic_header resolve_structure(const Eigen::MatrixXd& m,
                                   const std::optional<mm_dyadic_header>& forced,
                                   const std::optional<mm_dyadic_header>& from_file) {
  if (m.rows() != m.cols())
    fail(errc::dimension_mismatch, "input matrix is not square");
  const int d = static_cast<int>(m.rows());
  if (forced) {
    const index_t want =
        ((index_t{1} << forced->N) - 1) * forced->k;
    if (want != d)
      fail(errc::dimension_mismatch,
           "requested structure needs dimension " + std::to_string(want) +
               " but the input is " + std::to_string(d));
    return {forced->N, forced->k, dyadic_kind::symmetric};
  }
  if (from_file) return {from_file->N, from_file->k, dyadic_kind::symmetric};
  for (int n = 2; n <= 16; ++n) {
    const int blocks = (1 << n) - 1;
    if (d % blocks != 0) continue;
    const int k = d / blocks;
    const auto pat = materialize(dyadic_pattern{n, k, dyadic_kind::symmetric});
    bool ok = true;
    for (int i = 0; ok && i < d; ++i)
      for (int j = 0; ok && j < d; ++j)
        if (m(i, j) != 0.0 && !pat.contains(i / k + 1, j / k + 1)) ok = false;
    if (ok) return {n, k, dyadic_kind::symmetric};
  }
  return {1, d, dyadic_kind::symmetric};
}

Eigen::MatrixXd symmetrize_check(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    fail(errc::dimension_mismatch, "input matrix is not square");
  const double skew = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-12)
    fail(errc::pattern_violation,
         "input matrix is not symmetric (max skew " + fmt_g(skew, 3) + ")");
  return (m + m.transpose()) / 2.0;
}

Eigen::MatrixXd threshold_structure(const Eigen::MatrixXd& m, double thresh) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      out(i, j) = std::abs(m(i, j)) > thresh ? 1.0 : 0.0;
  for (int i = 0; i < m.rows(); ++i) out(i, i) = 1.0;
  return out;
}

int count_nonzeros(const Eigen::MatrixXd& m) {
  int n = 0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// generate

struct generate_opts {
  std::string family;
  int d = 0, N = 0, k = 0, lambda = -1;
  double p = 1.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double cond_target = 0.0;
  std::string out;
  std::string factor_out;
};

void run_generate(const generate_opts& o, manifest man) {
  const std::uint64_t seed = o.seed_given ? o.seed : default_seed();
  man.add("seed", std::to_string(seed));

  if (o.family == "spd_dyadic" || o.family == "spd_block_tridiagonal") {
    std::ostringstream desc;
    desc << "generator: family=" << o.family << " N=" << o.N << " k=" << o.k
         << " seed=" << seed;
    dyadic_matrix<double> sigma(dyadic_pattern{1, 1, dyadic_kind::symmetric});
    std::optional<dyadic_matrix<double>> factor;
    if (o.family == "spd_dyadic") {
      if (o.cond_target > 0.0) desc << " cond_target=" << fmt_g(o.cond_target);
      auto inst = spd_dyadic(o.N, o.k, seed, o.cond_target);
      sigma = std::move(inst.sigma);
      factor = std::move(inst.factor);
    } else {
      sigma = spd_block_tridiagonal(o.N, o.k, seed);
    }
    std::vector<std::string> comments = {desc.str()};
    for (const auto& l : man.mm_comments()) comments.push_back(l);
    write_matrix_market(o.out, sigma.to_dense(), true, false,
                        mm_dyadic_header{o.N, o.k, dyadic_kind::symmetric},
                        comments);
    std::cout << "wrote " << o.out << ": d=" << sigma.dim() << " family="
              << o.family << " seed=" << seed << "\n";
    if (!o.factor_out.empty()) {
      if (!factor)
        fail(errc::range_error,
             "--factor-out only applies to family spd_dyadic");
      write_matrix_market(o.factor_out, factor->to_dense(), false, false,
                          mm_dyadic_header{o.N, o.k, dyadic_kind::vertical},
                          comments);
      std::cout << "wrote " << o.factor_out << " (known factor)\n";
    }
    return;
  }

  const auto fam = family_from_name(o.family);
  if (!fam)
    fail(errc::range_error, "unknown family '" + o.family + "'");
  gen_spec spec;
  spec.family = *fam;
  spec.d = o.d;
  spec.N = o.N;
  spec.k = o.k;
  spec.lambda = o.lambda < 0 ? 0 : o.lambda;
  spec.p = o.p;
  spec.seed = seed;
  const Eigen::MatrixXd m = generate(spec);

  std::optional<mm_dyadic_header> hdr;
  if (*fam == gen_family::block_tridiagonal || *fam == gen_family::dyadic ||
      *fam == gen_family::banded_dyadic)
    hdr = mm_dyadic_header{spec.N, spec.k, dyadic_kind::symmetric};
  std::vector<std::string> comments = {"generator: " + to_text(spec)};
  for (const auto& l : man.mm_comments()) comments.push_back(l);
  write_matrix_market(o.out, m, true, true, hdr, comments);
  std::cout << "wrote " << o.out << ": d=" << m.rows() << " nnz="
            << count_nonzeros(m) << " family=" << o.family << " seed=" << seed
            << "\n";
}

// ---------------------------------------------------------------------------
// factorize

struct factorize_opts {
  std::string input;
  std::string dyadic;  // "N,k" or empty
  std::string fast_path = "auto";
  std::string out;
  std::string report;
};

std::optional<mm_dyadic_header> parse_dyadic_flag(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    fail(errc::range_error, "--dyadic expects N,k");
  try {
    mm_dyadic_header h;
    h.N = std::stoi(s.substr(0, comma));
    h.k = std::stoi(s.substr(comma + 1));
    return h;
  } catch (const std::exception&) {
    fail(errc::range_error, "--dyadic expects N,k");
  }
}

void run_factorize(const factorize_opts& o, manifest man) {
  const mm_file in = read_matrix_market(o.input);
  man.add_file("input", o.input);
  const Eigen::MatrixXd dense = symmetrize_check(in.matrix);
  const auto hdr =
      resolve_structure(dense, parse_dyadic_flag(o.dyadic), in.dyadic);
  const auto sigma =
      from_dense(dense, dyadic_pattern{hdr.N, hdr.k, dyadic_kind::symmetric});

  factor_options<double> fopts;
  if (o.fast_path == "off") fopts.fast_path = false;
  else if (o.fast_path == "auto" || o.fast_path == "on") fopts.fast_path = true;
  else fail(errc::range_error, "--fast-path must be auto, on, or off");

  auto fr = sequential_orthogonalize(sigma, fopts);

  std::vector<std::string> comments = {
      "orthogonalizer P with P^T S P = I for S in " + o.input};
  for (const auto& l : man.mm_comments()) comments.push_back(l);
  write_matrix_market(o.out, fr.P.to_dense(), false, false,
                      mm_dyadic_header{hdr.N, hdr.k, dyadic_kind::vertical},
                      comments);

  std::cout << "factorized " << o.input << ": d=" << sigma.dim() << " N="
            << hdr.N << " k=" << hdr.k
            << " path=" << (fr.used_fast_path ? "fast" : "general")
            << " scalar_flops=" << fr.flops.scalar_flops;
  if (fr.residual) std::cout << " residual=" << fmt_g(*fr.residual, 3);
  std::cout << "\nwrote " << o.out << "\n";

  if (!o.report.empty()) {
    man.add_file("output", o.out);
    write_csv(
        o.report, man,
        {"command", "input", "d", "N", "k", "fast_path", "used_fast_path",
         "residual", "block_multiplies", "block_adds", "unit_ops",
         "scalar_flops"},
        {{"factorize", o.input, std::to_string(sigma.dim()),
          std::to_string(hdr.N), std::to_string(hdr.k), o.fast_path,
          fr.used_fast_path ? "1" : "0",
          fr.residual ? fmt_g(*fr.residual) : "",
          std::to_string(fr.flops.block_multiplies),
          std::to_string(fr.flops.block_adds),
          std::to_string(fr.flops.unit_ops),
          std::to_string(fr.flops.scalar_flops)}});
    std::cout << "wrote " << o.report << "\n";
  }
}

// ---------------------------------------------------------------------------
// pack

struct pack_opts {
  std::string input;
  int order = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double threshold = 0.0;
  bool recursive = false;
  int max_depth = 8;
  std::string out;
  std::string report;
};

void print_tree(const separator_node& node, int depth) {
  std::cout << std::string(static_cast<std::size_t>(2 * depth), ' ')
            << "- rows=" << node.rows.size();
  if (!node.separator.empty()) {
    std::cout << " separator={";
    for (std::size_t i = 0; i < node.separator.size(); ++i)
      std::cout << (i ? "," : "") << node.separator[i];
    std::cout << "}";
  }
  std::cout << "\n";
  if (node.low) print_tree(*node.low, depth + 1);
  if (node.high) print_tree(*node.high, depth + 1);
}

void run_pack(const pack_opts& o, manifest man) {
  const std::uint64_t seed = o.seed_given ? o.seed : default_seed();
  man.add("seed", std::to_string(seed));
  const mm_file in = read_matrix_market(o.input);
  man.add_file("input", o.input);
  const Eigen::MatrixXd structure =
      threshold_structure(symmetrize_check(in.matrix), o.threshold);
  const int d = static_cast<int>(structure.rows());

  permutation perm(d);
  packing_report rep;
  if (o.recursive) {
    auto rr = recursive_dyadic_pack(structure, o.max_depth, seed);
    perm = rr.perm;
    rep = packing_stats(structure, perm, 0, o.order);
    std::cout << "separator tree:\n";
    print_tree(*rr.tree, 0);
  } else {
    auto pr = pack(structure, o.order, seed);
    perm = pr.perm;
    rep = pr.report;
  }

  write_permutation_file(o.out, perm.image());
  man.add_file("output", o.out);
  man.write_sidecar(o.out + ".manifest");

  std::cout << "packed " << o.input << ": d=" << d << " order=" << o.order
            << " half_width_l1=" << rep.reach_total
            << " half_bandwidth=" << rep.half_bandwidth
            << " eta_bar=" << fmt_g(rep.efficiency_mean, 6)
            << " fill=" << fmt_g(rep.fill, 6) << "\nwrote " << o.out << "\n";

  if (!o.report.empty()) {
    write_csv(
        o.report, man,
        {"command", "input", "d", "order", "seed", "recursive",
         "half_width_l1", "half_bandwidth", "eta_bar", "fill", "fill_order",
         "delta"},
        {{"pack", o.input, std::to_string(d), std::to_string(o.order),
          std::to_string(seed), o.recursive ? "1" : "0",
          std::to_string(rep.reach_total), std::to_string(rep.half_bandwidth),
          fmt_g(rep.efficiency_mean), fmt_g(rep.fill),
          std::to_string(rep.fill_order), fmt_g(rep.delta)}});
    std::cout << "wrote " << o.report << "\n";
  }
}

// ---------------------------------------------------------------------------
// simulate

struct simulate_opts {
  std::string study;
  int d = 0, N = 0, k = 0, lambda = -1;
  std::vector<double> p_list{0.25, 0.5, 0.75};
  std::vector<int> s_list{1, 2, 3};
  int reps = 20;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
};

struct running_stat {
  double sum = 0.0, sumsq = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double sd() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sumsq - n * m * m) / (n - 1)));
  }
};

// fraction of structural nonzeros of the relabeled matrix that land inside
// the study's target support
double in_structure_fraction(const Eigen::MatrixXd& packed, int k,
                             const block_sparsity_pattern* dyadic_pat) {
  const int d = static_cast<int>(packed.rows());
  std::int64_t inside = 0, total = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      if (packed(i, j) == 0.0) continue;
      ++total;
      const bool in = dyadic_pat
                          ? dyadic_pat->contains(i / k + 1, j / k + 1)
                          : std::abs(i / k - j / k) <= 1;
      if (in) ++inside;
    }
  return total ? static_cast<double>(inside) / static_cast<double>(total)
               : 1.0;
}

void run_simulate(const simulate_opts& o, manifest man) {
  const std::uint64_t seed = o.seed_given ? o.seed : default_seed();
  man.add("seed", std::to_string(seed));
  if (o.reps < 1) fail(errc::range_error, "--reps must be >= 1");
  if (o.p_list.empty() || o.s_list.empty())
    fail(errc::range_error, "empty parameter grid");

  simulate_opts cfg = o;  // fill per-study defaults
  const bool band_study = o.study == "band";
  const bool tridiag_study = o.study == "block_tridiagonal";
  const bool dyadic_study = o.study == "dyadic";
  const bool banded_dyadic_study = o.study == "banded_dyadic";
  if (!band_study && !tridiag_study && !dyadic_study && !banded_dyadic_study)
    fail(errc::range_error, "unknown study '" + o.study + "'");
  if (band_study) {
    if (cfg.d == 0) cfg.d = 255;
    if (cfg.lambda < 0) cfg.lambda = 10;
  } else {
    if (cfg.N == 0) cfg.N = tridiag_study ? 4 : 5;
    if (cfg.k == 0) cfg.k = 10;
    if (banded_dyadic_study && cfg.lambda < 0) cfg.lambda = 60;
  }

  std::filesystem::create_directories(o.out_dir);
  const std::string path =
      (std::filesystem::path(o.out_dir) / ("simulate_" + o.study + ".csv"))
          .string();

  std::optional<block_sparsity_pattern> pat;
  if (dyadic_study || banded_dyadic_study)
    pat = materialize(dyadic_pattern{cfg.N, cfg.k, dyadic_kind::symmetric});

  std::vector<std::vector<std::string>> rows;
  for (std::size_t pi = 0; pi < cfg.p_list.size(); ++pi) {
    const double p = cfg.p_list[pi];
    for (int s : cfg.s_list) {
      running_stat packed_l1, packed_linf, packed_fill;
      running_stat base_l1, base_linf, base_fill, in_struct;
      int failures = 0;
      std::string first_error;
      for (int r = 0; r < o.reps; ++r) {
        const std::uint64_t gen_seed =
            seed + 101 * static_cast<std::uint64_t>(r) +
            7919 * static_cast<std::uint64_t>(pi);
        try {
          Eigen::MatrixXd sigma;
          if (band_study) sigma = random_band(cfg.d, cfg.lambda, p, gen_seed);
          else if (tridiag_study)
            sigma = block_tridiagonal_structure(cfg.N, cfg.k, p, gen_seed);
          else if (dyadic_study)
            sigma = dyadic_structure(cfg.N, cfg.k, p, gen_seed);
          else
            sigma = banded_dyadic_structure(cfg.N, cfg.k, p, cfg.lambda,
                                            gen_seed);
          const int d = static_cast<int>(sigma.rows());
          const permutation scramble = random_permutation(d, gen_seed + 31);
          const Eigen::MatrixXd hidden = apply_permutation(sigma, scramble);

          const auto base = packing_stats(sigma, permutation(d), 0, s);
          auto pr = pack(hidden, s, gen_seed + 67);

          packed_l1.add(static_cast<double>(pr.report.reach_total) / d);
          packed_linf.add(pr.report.half_bandwidth);
          packed_fill.add(pr.report.fill);
          base_l1.add(static_cast<double>(base.reach_total) / d);
          base_linf.add(base.half_bandwidth);
          base_fill.add(base.fill);
          if (!band_study) {
            const Eigen::MatrixXd packed =
                apply_permutation(hidden, pr.perm.inverse());
            in_struct.add(in_structure_fraction(packed, cfg.k,
                                                pat ? &*pat : nullptr));
          }
        } catch (const error& e) {
          ++failures;
          if (first_error.empty()) first_error = e.what();
        }
      }
      rows.push_back(
          {o.study, std::to_string(band_study ? cfg.d : 0),
           std::to_string(band_study ? 0 : cfg.N),
           std::to_string(band_study ? 0 : cfg.k),
           std::to_string(cfg.lambda < 0 ? 0 : cfg.lambda), fmt_g(p, 6),
           std::to_string(s), std::to_string(o.reps),
           fmt_g(packed_l1.mean()), fmt_g(packed_l1.sd()),
           fmt_g(packed_linf.mean()), fmt_g(packed_linf.sd()),
           fmt_g(packed_fill.mean()), fmt_g(packed_fill.sd()),
           fmt_g(base_l1.mean()), fmt_g(base_l1.sd()),
           fmt_g(base_linf.mean()), fmt_g(base_linf.sd()),
           fmt_g(base_fill.mean()), fmt_g(base_fill.sd()),
           band_study ? "" : fmt_g(in_struct.mean()),
           band_study ? "" : fmt_g(in_struct.sd()),
           std::to_string(failures), first_error});
      std::cout << "cell p=" << p << " s=" << s << " done (" << failures
                << " failures)\n";
    }
  }

  write_csv(path, man,
            {"study", "d", "N", "k", "lambda", "p", "s", "reps",
             "packed_l1_over_d_mean", "packed_l1_over_d_sd",
             "packed_linf_mean", "packed_linf_sd", "packed_fill_mean",
             "packed_fill_sd", "base_l1_over_d_mean", "base_l1_over_d_sd",
             "base_linf_mean", "base_linf_sd", "base_fill_mean",
             "base_fill_sd", "in_structure_mean", "in_structure_sd",
             "failures", "error"},
            rows);
  std::cout << "wrote " << path << "\n";
}

// ---------------------------------------------------------------------------
// bench

struct bench_opts {
  std::string family = "spd_dyadic";
  int k = 2;
  std::string n_range = "4..8";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::exception&) {
    fail(errc::range_error, "--N expects A..B or a single height");
  }
}

struct fit_line {
  double coeff = 0.0, exponent = 0.0, r2 = 0.0;
};

// least squares of log(flops) on log(model size); coeff is the geometric
// mean of flops / model
fit_line fit_loglog(const std::vector<double>& model,
                    const std::vector<double>& flops) {
  const int n = static_cast<int>(model.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, sratio = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(model[static_cast<std::size_t>(i)]);
    const double y = std::log(flops[static_cast<std::size_t>(i)]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    sratio += y - x;
  }
  fit_line out;
  const double denom = n * sxx - sx * sx;
  if (n < 2 || denom == 0.0) return out;
  out.exponent = (n * sxy - sx * sy) / denom;
  const double a = (sy - out.exponent * sx) / n;
  out.coeff = std::exp(sratio / n);
  double ss_res = 0, ss_tot = 0;
  const double ymean = sy / n;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(model[static_cast<std::size_t>(i)]);
    const double y = std::log(flops[static_cast<std::size_t>(i)]);
    const double pred = a + out.exponent * x;
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - ymean) * (y - ymean);
  }
  out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

void run_bench(const bench_opts& o, manifest man) {
  const std::uint64_t seed = o.seed_given ? o.seed : default_seed();
  man.add("seed", std::to_string(seed));
  if (o.family != "spd_dyadic" && o.family != "band")
    fail(errc::range_error, "--family must be spd_dyadic or band");
  const auto [n_lo, n_hi] = parse_range(o.n_range);
  if (n_lo < 1 || n_hi < n_lo)
    fail(errc::range_error, "--N range '" + o.n_range + "' is empty");

  std::vector<std::vector<std::string>> rows;
  std::vector<double> model_general, flops_general, model_fast, flops_fast;
  std::string wall_entries;
  for (int n = n_lo; n <= n_hi; ++n) {
    dyadic_matrix<double> sigma(dyadic_pattern{1, 1, dyadic_kind::symmetric});
    if (o.family == "spd_dyadic")
      sigma = spd_dyadic(n, o.k, seed + static_cast<std::uint64_t>(n)).sigma;
    else
      sigma = spd_block_tridiagonal(n, o.k, seed + static_cast<std::uint64_t>(n));
    const double d = static_cast<double>(sigma.dim());
    const double logdk = std::log2(d / o.k);

    for (const bool fast : {false, true}) {
      factor_options<double> fopts;
      fopts.fast_path = fast;
      const auto t0 = std::chrono::steady_clock::now();
      auto fr = sequential_orthogonalize(sigma, fopts);
      const auto t1 = std::chrono::steady_clock::now();
      if (fast && !fr.used_fast_path) continue;  // nothing new to report
      const double ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      const char* path = fr.used_fast_path ? "fast" : "general";
      if (!wall_entries.empty()) wall_entries += ";";
      wall_entries += std::string(path) + ":N" + std::to_string(n) + ":" +
                      fmt_g(ms, 4) + "ms";
      rows.push_back({o.family, std::to_string(o.k), std::to_string(n),
                      fmt_g(d, 10), path,
                      std::to_string(fr.flops.block_multiplies),
                      std::to_string(fr.flops.block_adds),
                      std::to_string(fr.flops.unit_ops),
                      std::to_string(fr.flops.scalar_flops),
                      fr.residual ? fmt_g(*fr.residual, 6) : ""});
      const double scalar = static_cast<double>(fr.flops.scalar_flops);
      if (fr.used_fast_path) {
        model_fast.push_back(d * logdk);
        flops_fast.push_back(scalar);
      } else {
        model_general.push_back(d * logdk * logdk);
        flops_general.push_back(scalar);
      }
      std::cout << "N=" << n << " d=" << d << " path=" << path
                << " scalar_flops=" << fr.flops.scalar_flops << " ("
                << fmt_g(ms, 4) << " ms)\n";
    }
  }

  // wall-clock readings are measurements, not data: they live in the
  // manifest so identical reruns reproduce the data section byte-for-byte
  man.add("wall_ms", wall_entries);
  std::vector<std::string> trailer;
  if (model_general.size() >= 2) {
    const auto f = fit_loglog(model_general, flops_general);
    trailer.push_back("# fit: path=general model=d*log2(d/k)^2 coeff=" +
                      fmt_g(f.coeff, 6) + " exponent=" + fmt_g(f.exponent, 6) +
                      " r2=" + fmt_g(f.r2, 6));
  }
  if (model_fast.size() >= 2) {
    const auto f = fit_loglog(model_fast, flops_fast);
    trailer.push_back("# fit: path=fast model=d*log2(d/k) coeff=" +
                      fmt_g(f.coeff, 6) + " exponent=" + fmt_g(f.exponent, 6) +
                      " r2=" + fmt_g(f.r2, 6));
  }
  write_csv(o.out, man,
            {"family", "k", "N", "d", "path", "block_multiplies",
             "block_adds", "unit_ops", "scalar_flops", "residual"},
            rows, trailer);
  for (const auto& t : trailer) std::cout << t << "\n";
  std::cout << "wrote " << o.out << "\n";
}

// ---------------------------------------------------------------------------

int exit_code_for(const error& e) {
  switch (e.code()) {
    case errc::io_error: return 3;
    case errc::pattern_violation: return 4;
    case errc::definiteness: return 5;
    case errc::disconnected: return 6;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> raw_args(argv + 1, argv + argc);

  CLI::App app{
      "dyapack: factorization, inversion, and permutation packing for "
      "symmetric positive-definite matrices with dyadic block sparsity"};
  app.set_version_flag("--version", dyapack::version_string);
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  app.add_option("--threads", threads,
                 "cap internal worker threads (results are invariant)");

  generate_opts g;
  auto* gen = app.add_subcommand(
      "generate", "emit a seeded test structure as a Matrix Market file");
  gen->add_option("--family", g.family,
                  "full_band|random_band|block_tridiagonal|dyadic|"
                  "banded_dyadic|spd_dyadic|spd_block_tridiagonal")
      ->required();
  gen->add_option("--d", g.d, "dimension (band families)");
  gen->add_option("--N", g.N, "pyramid height (structured families)");
  gen->add_option("--k", g.k, "block breadth (structured families)");
  gen->add_option("--lambda", g.lambda, "scalar half-bandwidth");
  gen->add_option("--p", g.p, "fill probability in (0,1]");
  gen->add_option("--seed", g.seed, "RNG seed (default: DYAPACK_SEED or 0)")
      ->trigger_on_parse()
      ->each([&](const std::string&) { g.seed_given = true; });
  gen->add_option("--cond-target", g.cond_target,
                  "condition-number target for spd_dyadic");
  gen->add_option("--out", g.out, "output .mtx path")->required();
  gen->add_option("--factor-out", g.factor_out,
                  "also write the known factor (spd_dyadic)");

  factorize_opts f;
  auto* fac = app.add_subcommand(
      "factorize", "sequential orthogonalization: P with P^T S P = I");
  fac->add_option("input", f.input, "input .mtx")->required();
  fac->add_option("--dyadic", f.dyadic,
                  "force structure as N,k (default: header or auto-detect, "
                  "preferring the largest breadth)");
  fac->add_option("--fast-path", f.fast_path,
                  "auto|on|off: two-row strip shortcut on block-tridiagonal "
                  "inputs (on behaves like auto; the shortcut only applies "
                  "when the input qualifies)");
  fac->add_option("--out", f.out, "output path for P (.mtx)")->required();
  fac->add_option("--report", f.report, "CSV report path");

  pack_opts p;
  auto* pk = app.add_subcommand(
      "pack", "recover a bandwidth-packing relabeling of a 0-1 structure");
  pk->add_option("input", p.input, "input .mtx (pattern or thresholded real)")
      ->required();
  pk->add_option("--order", p.order, "neighborhood order s >= 1");
  pk->add_option("--seed", p.seed, "RNG seed (default: DYAPACK_SEED or 0)")
      ->trigger_on_parse()
      ->each([&](const std::string&) { p.seed_given = true; });
  pk->add_option("--threshold", p.threshold,
                 "treat |entry| > threshold as structural");
  pk->add_flag("--recursive", p.recursive,
               "nested separator packing for two-level structures");
  pk->add_option("--max-depth", p.max_depth, "recursion depth cap");
  pk->add_option("--out", p.out, "output permutation file (one-based)")
      ->required();
  pk->add_option("--report", p.report, "CSV report path");

  simulate_opts s;
  auto* sim = app.add_subcommand(
      "simulate", "seeded packing sweeps over a (p, s) grid");
  sim->add_option("--study", s.study,
                  "band|block_tridiagonal|dyadic|banded_dyadic")
      ->required();
  sim->add_option("--d", s.d, "dimension (band study; default 255)");
  sim->add_option("--N", s.N, "pyramid height (structured studies)");
  sim->add_option("--k", s.k, "block breadth (structured studies)");
  sim->add_option("--lambda", s.lambda, "half-bandwidth (band/banded_dyadic)");
  sim->add_option("--p-list", s.p_list, "fill probabilities")->delimiter(',');
  sim->add_option("--s-list", s.s_list, "neighborhood orders")->delimiter(',');
  sim->add_option("--reps", s.reps, "repetitions per cell");
  sim->add_option("--seed", s.seed, "RNG seed (default: DYAPACK_SEED or 0)")
      ->trigger_on_parse()
      ->each([&](const std::string&) { s.seed_given = true; });
  sim->add_option("--out", s.out_dir, "output directory")->required();

  bench_opts b;
  auto* ben = app.add_subcommand(
      "bench", "flop scaling of the factorization across pyramid heights");
  ben->add_option("--family", b.family, "spd_dyadic|band");
  ben->add_option("--k", b.k, "block breadth");
  ben->add_option("--N", b.n_range, "height range A..B");
  ben->add_option("--seed", b.seed, "RNG seed (default: DYAPACK_SEED or 0)")
      ->trigger_on_parse()
      ->each([&](const std::string&) { b.seed_given = true; });
  ben->add_option("--out", b.out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (threads > 0) dyapack::set_max_threads(threads);
    const std::string cmd = app.get_subcommands().front()->get_name();
    manifest man(cmd, raw_args);
    man.add("threads", std::to_string(dyapack::max_threads()));
    if (gen->parsed()) run_generate(g, std::move(man));
    else if (fac->parsed()) run_factorize(f, std::move(man));
    else if (pk->parsed()) run_pack(p, std::move(man));
    else if (sim->parsed()) run_simulate(s, std::move(man));
    else if (ben->parsed()) run_bench(b, std::move(man));
  } catch (const disconnected_error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
    const auto& comps = e.components();
    for (std::size_t c = 0; c < comps.size(); ++c) {
      std::cerr << "component " << (c + 1) << " (" << comps[c].size()
                << " rows):";
      const std::size_t show = std::min<std::size_t>(comps[c].size(), 12);
      for (std::size_t i = 0; i < show; ++i) std::cerr << " " << comps[c][i];
      if (show < comps[c].size()) std::cerr << " ...";
      std::cerr << "\n";
    }
    return 6;
  } catch (const error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
