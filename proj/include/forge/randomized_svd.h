#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace forge {

// Matrix-free view of an m x n matrix A.
struct LinearOperator {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply;            // A * M
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply_transpose;  // A^T * M

  static LinearOperator FromDense(Eigen::MatrixXd a);
};

struct RandomizedSvdOptions {
  std::size_t oversample = 10;
  std::size_t power_iterations = 4;
  std::uint64_t seed = 13;
};

struct TruncatedSvd {
  Eigen::MatrixXd u;  // m x k
  Eigen::VectorXd s;  // k, non-increasing
  Eigen::MatrixXd v;  // n x k
};

// Randomized range finder with subspace (power) iteration followed by an
// exact SVD of the small projected matrix. Each singular pair is signed so
// the largest-magnitude entry of its left vector is positive.
TruncatedSvd RandomizedSvd(const LinearOperator& a, std::size_t k,
                           const RandomizedSvdOptions& options = {});

}  // namespace forge
