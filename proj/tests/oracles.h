#pragma once

// Reference computations used by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "forge/cca.h"
#include "forge/crf.h"
#include "forge/views.h"

namespace forge::oracle {

inline SparseRowMatrix ToSparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

inline Eigen::MatrixXd RandomGaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Canonical correlations as the positive eigenvalues of the symmetric pencil
//   [0 Cxz; Czx 0] v = rho [Cxx + k1 I, 0; 0, Czz + k2 I] v,
// from dense products of the raw matrices.
inline Eigen::VectorXd CanonicalCorrelations(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                                             double kappa1, double kappa2) {
  const double n = static_cast<double>(x.rows());
  const Eigen::Index d1 = x.cols(), d2 = z.cols();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d1 + d2, d1 + d2);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d1 + d2, d1 + d2);
  a.topRightCorner(d1, d2) = x.transpose() * z / n;
  a.bottomLeftCorner(d2, d1) = a.topRightCorner(d1, d2).transpose();
  b.topLeftCorner(d1, d1) = x.transpose() * x / n + kappa1 * Eigen::MatrixXd::Identity(d1, d1);
  b.bottomRightCorner(d2, d2) = z.transpose() * z / n + kappa2 * Eigen::MatrixXd::Identity(d2, d2);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, b);
  Eigen::VectorXd ev = solver.eigenvalues();
  std::vector<double> values(ev.data(), ev.data() + ev.size());
  std::sort(values.begin(), values.end(), std::greater<>());
  const Eigen::Index m = std::min(d1, d2);
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out[i] = values[static_cast<std::size_t>(i)];
  return out;
}

// Matrix with prescribed singular values and random orthogonal factors.
inline Eigen::MatrixXd WithSpectrum(Eigen::Index rows, Eigen::Index cols, const Eigen::VectorXd& s,
                                    std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qu(RandomGaussian(rows, s.size(), rng));
  Eigen::HouseholderQR<Eigen::MatrixXd> qv(RandomGaussian(cols, s.size(), rng));
  Eigen::MatrixXd u = qu.householderQ() * Eigen::MatrixXd::Identity(rows, s.size());
  Eigen::MatrixXd v = qv.householderQ() * Eigen::MatrixXd::Identity(cols, s.size());
  return u * s.asDiagonal() * v.transpose();
}

inline double SpectralNorm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

// Every tag sequence of length n in lexicographic order under B < I < O.
inline void ForEachPath(std::size_t n, const std::function<void(const std::vector<Tag>&)>& fn) {
  std::vector<Tag> tags(n, Tag::kB);
  while (true) {
    fn(tags);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (tags[i] != Tag::kO) {
        tags[i] = static_cast<Tag>(static_cast<int>(tags[i]) + 1);
        break;
      }
      tags[i] = Tag::kB;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

// Highest-scoring path by enumeration; the first path seen wins ties.
inline std::vector<Tag> BruteForceArgmax(const CrfModel& model, const CompiledSentence& s) {
  std::vector<Tag> best;
  double best_score = -std::numeric_limits<double>::infinity();
  ForEachPath(s.size(), [&](const std::vector<Tag>& tags) {
    double sc = model.Score(s, tags);
    if (sc > best_score) {
      best_score = sc;
      best = tags;
    }
  });
  return best;
}

inline double BruteForceLogPartition(const CrfModel& model, const CompiledSentence& s) {
  std::vector<double> scores;
  ForEachPath(s.size(), [&](const std::vector<Tag>& tags) { scores.push_back(model.Score(s, tags)); });
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double v : scores) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

}  // namespace forge::oracle
