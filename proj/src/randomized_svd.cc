#include "forge/randomized_svd.h"

#include <algorithm>
#include <memory>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "forge/error.h"

namespace forge {
namespace {

Eigen::MatrixXd Orthonormalize(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

LinearOperator LinearOperator::FromDense(Eigen::MatrixXd a) {
  auto shared = std::make_shared<const Eigen::MatrixXd>(std::move(a));
  LinearOperator op;
  op.rows = shared->rows();
  op.cols = shared->cols();
  op.apply = [shared](const Eigen::MatrixXd& m) -> Eigen::MatrixXd { return *shared * m; };
  op.apply_transpose = [shared](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    return shared->transpose() * m;
  };
  return op;
}

TruncatedSvd RandomizedSvd(const LinearOperator& a, std::size_t k,
                           const RandomizedSvdOptions& options) {
  const auto min_dim = static_cast<std::size_t>(std::min(a.rows, a.cols));
  if (k == 0 || k > min_dim) {
    throw Error("randomized SVD: k=" + std::to_string(k) + " outside [1, " +
                std::to_string(min_dim) + "]");
  }
  const auto width = static_cast<Eigen::Index>(std::min(k + options.oversample, min_dim));

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd omega(a.cols, width);
  for (Eigen::Index j = 0; j < omega.cols(); ++j) {
    for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = normal(rng);
  }

  Eigen::MatrixXd q = Orthonormalize(a.apply(omega));
  for (std::size_t it = 0; it < options.power_iterations; ++it) {
    Eigen::MatrixXd qt = Orthonormalize(a.apply_transpose(q));
    q = Orthonormalize(a.apply(qt));
  }

  // B = Q^T A, formed as (A^T Q)^T.
  Eigen::MatrixXd b = a.apply_transpose(q).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const auto kk = static_cast<Eigen::Index>(k);
  TruncatedSvd out;
  out.u = q * svd.matrixU().leftCols(kk);
  out.s = svd.singularValues().head(kk);
  out.v = svd.matrixV().leftCols(kk);
  for (Eigen::Index j = 0; j < kk; ++j) {
    Eigen::Index arg = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, j) < 0) {
      out.u.col(j) *= -1.0;
      out.v.col(j) *= -1.0;
    }
  }
  return out;
}

}  // namespace forge
