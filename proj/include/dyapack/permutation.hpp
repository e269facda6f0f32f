#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace dyapack {

// One-based permutation of {1, ..., d}, stored as its image array.
class permutation {
 public:
  explicit permutation(int d = 0);  // identity
  static permutation from_image(std::vector<int> image);
  static permutation reversal(int d);

  int size() const { return static_cast<int>(image_.size()); }
  int operator()(int i) const;  // image of i, both one-based

  const std::vector<int>& image() const { return image_; }
  permutation inverse() const;
  // (a.compose(b))(i) = a(b(i))
  permutation compose(const permutation& other) const;

  friend bool operator==(const permutation&, const permutation&) = default;

 private:
  std::vector<int> image_;
};

// out(i, j) = m(p(i), p(j)): row/column relabeling by p
Eigen::MatrixXd apply_permutation(const Eigen::MatrixXd& m,
                                  const permutation& p);

permutation random_permutation(int d, std::uint64_t seed);

}  // namespace dyapack
