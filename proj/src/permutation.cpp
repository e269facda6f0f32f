#include "dyapack/permutation.hpp"

#include <numeric>
#include <string>

#include "dyapack/errors.hpp"
#include "dyapack/rng.hpp"

namespace dyapack {

permutation::permutation(int d) {
  if (d < 0) fail(errc::range_error, "permutation size must be >= 0");
  image_.resize(static_cast<std::size_t>(d));
  std::iota(image_.begin(), image_.end(), 1);
}

permutation permutation::from_image(std::vector<int> image) {
  std::vector<char> hit(image.size(), 0);
  for (int v : image) {
    if (v < 1 || v > static_cast<int>(image.size()) || hit[v - 1])
      fail(errc::range_error,
           "image is not a permutation of 1.." + std::to_string(image.size()));
    hit[v - 1] = 1;
  }
  permutation p;
  p.image_ = std::move(image);
  return p;
}

permutation permutation::reversal(int d) {
  permutation p(d);
  for (int i = 0; i < d; ++i) p.image_[static_cast<std::size_t>(i)] = d - i;
  return p;
}

int permutation::operator()(int i) const {
  if (i < 1 || i > size())
    fail(errc::range_error, "permutation argument out of range");
  return image_[static_cast<std::size_t>(i - 1)];
}

permutation permutation::inverse() const {
  std::vector<int> inv(image_.size());
  for (int i = 1; i <= size(); ++i)
    inv[static_cast<std::size_t>(image_[static_cast<std::size_t>(i - 1)] - 1)] =
        i;
  return from_image(std::move(inv));
}

permutation permutation::compose(const permutation& other) const {
  if (size() != other.size())
    fail(errc::dimension_mismatch, "composed permutations differ in size");
  std::vector<int> img(image_.size());
  for (int i = 1; i <= size(); ++i)
    img[static_cast<std::size_t>(i - 1)] = (*this)(other(i));
  return from_image(std::move(img));
}

Eigen::MatrixXd apply_permutation(const Eigen::MatrixXd& m,
                                  const permutation& p) {
  if (m.rows() != m.cols())
    fail(errc::dimension_mismatch, "relabeling needs a square matrix");
  if (m.rows() != p.size())
    fail(errc::dimension_mismatch,
         "permutation size does not match the matrix");
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 1; i <= p.size(); ++i)
    for (int j = 1; j <= p.size(); ++j)
      out(i - 1, j - 1) = m(p(i) - 1, p(j) - 1);
  return out;
}

permutation random_permutation(int d, std::uint64_t seed) {
  if (d < 0) fail(errc::range_error, "permutation size must be >= 0");
  permutation p(d);
  std::vector<int> img = p.image();
  xoshiro256pp rng(seed, stream::permutation);
  rng.shuffle(img);
  return permutation::from_image(std::move(img));
}

}  // namespace dyapack
