#include "dyapack/mm_io.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dyapack/errors.hpp"

namespace dyapack {

namespace {

// dimension guard: dense expansion of anything larger is a caller bug
constexpr long long max_mm_dim = 1 << 16;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::optional<mm_dyadic_header> parse_dyadic_comment(const std::string& line) {
  // expected shape: %dyadic N=4 k=3 kind=s   (after the first % is stripped)
  std::istringstream ss(line);
  std::string tag;
  ss >> tag;
  if (lower(tag) != "%dyadic" && lower(tag) != "dyadic") return std::nullopt;
  mm_dyadic_header h;
  bool have_n = false, have_k = false, have_kind = false;
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) return std::nullopt;
    const std::string key = lower(tok.substr(0, eq));
    const std::string val = tok.substr(eq + 1);
    try {
      if (key == "n") {
        h.N = std::stoi(val);
        have_n = true;
      } else if (key == "k") {
        h.k = std::stoi(val);
        have_k = true;
      } else if (key == "kind") {
        auto kk = kind_from_name(lower(val));
        if (!kk) return std::nullopt;
        h.kind = *kk;
        have_kind = true;
      }
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (have_n && have_k && have_kind) return h;
  return std::nullopt;
}

}  // namespace

mm_file read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line))
    fail(errc::io_error, "'" + path + "' is empty");
  std::istringstream banner(line);
  std::string marker, object, format, field, qualifier;
  banner >> marker >> object >> format >> field >> qualifier;
  if (lower(marker) != "%%matrixmarket" || lower(object) != "matrix")
    fail(errc::io_error, "'" + path + "' is not a Matrix Market matrix file");
  if (lower(format) != "coordinate")
    fail(errc::io_error, "only the coordinate format is supported");
  field = lower(field);
  qualifier = lower(qualifier);
  if (field != "real" && field != "integer" && field != "pattern")
    fail(errc::io_error, "unsupported field type '" + field + "'");
  if (qualifier != "general" && qualifier != "symmetric")
    fail(errc::io_error, "unsupported qualifier '" + qualifier + "'");

  mm_file out;
  out.pattern_only = field == "pattern";
  out.symmetric = qualifier == "symmetric";

  // comments and the size line
  long long rows = -1, cols = -1, entries = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '%') {
      const std::string body = line.substr(1);
      if (auto h = parse_dyadic_comment(body)) {
        out.dyadic = h;
      } else {
        out.comments.push_back(body);
      }
      continue;
    }
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> entries))
      fail(errc::io_error, "malformed size line in '" + path + "'");
    break;
  }
  if (rows < 0)
    fail(errc::io_error, "'" + path + "' has no size line");
  if (rows != cols)
    fail(errc::io_error, "matrix in '" + path + "' is not square");
  if (rows > max_mm_dim)
    fail(errc::io_error, "matrix in '" + path + "' is too large to densify");

  out.matrix = Eigen::MatrixXd::Zero(rows, cols);
  long long seen = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '%') continue;
    std::istringstream ss(line);
    long long i = 0, j = 0;
    double v = 1.0;
    if (!(ss >> i >> j))
      fail(errc::io_error, "malformed entry line in '" + path + "'");
    if (!out.pattern_only && !(ss >> v))
      fail(errc::io_error, "entry without a value in '" + path + "'");
    if (i < 1 || i > rows || j < 1 || j > cols)
      fail(errc::io_error, "entry (" + std::to_string(i) + ", " +
                               std::to_string(j) + ") outside the " +
                               std::to_string(rows) + " x " +
                               std::to_string(cols) + " shape");
    out.matrix(i - 1, j - 1) = v;
    if (out.symmetric) out.matrix(j - 1, i - 1) = v;
    ++seen;
  }
  if (entries >= 0 && seen != entries)
    fail(errc::io_error, "expected " + std::to_string(entries) +
                             " entries in '" + path + "', found " +
                             std::to_string(seen));
  return out;
}

void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m,
                         bool symmetric, bool pattern_only,
                         const std::optional<mm_dyadic_header>& dyadic,
                         const std::vector<std::string>& comments) {
  if (m.rows() != m.cols() && symmetric)
    fail(errc::io_error, "symmetric output needs a square matrix");
  std::ofstream outf(path);
  if (!outf) fail(errc::io_error, "cannot open '" + path + "' for writing");

  outf << "%%MatrixMarket matrix coordinate "
       << (pattern_only ? "pattern" : "real") << ' '
       << (symmetric ? "symmetric" : "general") << '\n';
  if (dyadic)
    outf << "%%dyadic N=" << dyadic->N << " k=" << dyadic->k << " kind="
         << kind_name(dyadic->kind)[0] << '\n';
  for (const auto& c : comments) outf << '%' << c << '\n';

  std::vector<std::pair<long long, long long>> coords;
  for (long long j = 0; j < m.cols(); ++j)
    for (long long i = symmetric ? j : 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) coords.emplace_back(i, j);
  // column-major lower triangle for symmetric, column-major for general

  outf << m.rows() << ' ' << m.cols() << ' ' << coords.size() << '\n';
  char buf[64];
  for (const auto& [i, j] : coords) {
    if (pattern_only) {
      outf << (i + 1) << ' ' << (j + 1) << '\n';
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      outf << (i + 1) << ' ' << (j + 1) << ' ' << buf << '\n';
    }
  }
  if (!outf) fail(errc::io_error, "failed while writing '" + path + "'");
}

std::vector<int> read_permutation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "' for reading");
  std::vector<int> image;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#' || line[0] == '%') continue;
    std::istringstream ss(line);
    long long v = 0;
    if (!(ss >> v))
      fail(errc::io_error, "malformed permutation line '" + line + "'");
    std::string rest;
    if (ss >> rest)
      fail(errc::io_error, "trailing content on permutation line '" + line +
                               "'");
    image.push_back(static_cast<int>(v));
  }
  if (image.empty())
    fail(errc::io_error, "'" + path + "' contains no permutation entries");
  std::vector<char> hit(image.size(), 0);
  for (int v : image) {
    if (v < 1 || v > static_cast<int>(image.size()) || hit[v - 1])
      fail(errc::io_error,
           "'" + path + "' is not a one-based permutation of 1.." +
               std::to_string(image.size()));
    hit[v - 1] = 1;
  }
  return image;
}

void write_permutation_file(const std::string& path,
                            const std::vector<int>& image) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot open '" + path + "' for writing");
  for (int v : image) out << v << '\n';
  if (!out) fail(errc::io_error, "failed while writing '" + path + "'");
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open '" + path + "' for digesting");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char chunk[4096];
  while (in.read(chunk, sizeof chunk) || in.gcount() > 0) {
    for (std::streamsize b = 0; b < in.gcount(); ++b) {
      h ^= static_cast<unsigned char>(chunk[b]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return std::string(buf);
}

}  // namespace dyapack
