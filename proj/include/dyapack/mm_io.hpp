#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dyapack/pyramid.hpp"

namespace dyapack {

// Matrix Market coordinate files, with an optional structured-pattern header
//   %%dyadic N=<height> k=<breadth> kind=<h|v|s>
// on the line after the banner, and free-form %-comments that are preserved
// so generation provenance can ride along with the data.

struct mm_dyadic_header {
  int N = 1;
  int k = 1;
  dyadic_kind kind = dyadic_kind::symmetric;
};

struct mm_file {
  Eigen::MatrixXd matrix;
  bool symmetric = false;     // stored with the symmetric qualifier
  bool pattern_only = false;  // pattern field: entries read as 1.0
  std::optional<mm_dyadic_header> dyadic;
  std::vector<std::string> comments;  // '%' lines minus the marker
};

mm_file read_matrix_market(const std::string& path);

void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m,
                         bool symmetric, bool pattern_only,
                         const std::optional<mm_dyadic_header>& dyadic = {},
                         const std::vector<std::string>& comments = {});

// strict one-based permutation image, one entry per line
std::vector<int> read_permutation_file(const std::string& path);
void write_permutation_file(const std::string& path,
                            const std::vector<int>& image);

// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex
std::string file_digest(const std::string& path);

}  // namespace dyapack
