#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "forge/embeddings.h"
#include "forge/randomized_svd.h"
#include "forge/views.h"

namespace forge {

// Raw second-moment sums of two row-aligned views. Summaries over disjoint
// row sets add, so accumulation can be split across workers.
struct CovarianceSummary {
  std::size_t n = 0;
  Eigen::SparseMatrix<double> sxx;  // X^T X
  Eigen::SparseMatrix<double> szz;  // Z^T Z
  Eigen::SparseMatrix<double> sxz;  // X^T Z
  Eigen::VectorXd sx;               // column sums of X
  Eigen::VectorXd sz;

  void Merge(const CovarianceSummary& other);

  // Second moments divided by n (uncentered).
  Eigen::SparseMatrix<double> Cxx() const { return sxx / static_cast<double>(n); }
  Eigen::SparseMatrix<double> Czz() const { return szz / static_cast<double>(n); }
  Eigen::SparseMatrix<double> Cxz() const { return sxz / static_cast<double>(n); }
  Eigen::VectorXd MeanX() const { return sx / static_cast<double>(n); }
  Eigen::VectorXd MeanZ() const { return sz / static_cast<double>(n); }
};

CovarianceSummary AccumulateCovariance(const SparseRowMatrix& x, const SparseRowMatrix& z);

struct CcaOptions {
  std::size_t k = 30;
  // Ridge added to each view covariance before whitening. With
  // kappa_relative the per-view ridge is kappa * trace(C) / d instead.
  // Scaling a view by c leaves the canonical correlations unchanged only
  // when its ridge is scaled by c^2 as well.
  double kappa = 1e-4;
  bool kappa_relative = false;
  bool center = false;
  // Views wider than this are whitened with the diagonal of their covariance.
  std::size_t full_whitening_max_dim = 2000;
  RandomizedSvdOptions svd;
};

struct CcaModel {
  Eigen::MatrixXd phi1;              // d1 x k
  Eigen::MatrixXd phi2;              // d2 x k
  Eigen::VectorXd singular_values;   // canonical correlations, non-increasing
  double kappa1 = 0.0;               // ridge actually applied per view
  double kappa2 = 0.0;
  bool diagonal1 = false;            // view whitened with its diagonal only
  bool diagonal2 = false;

  std::size_t k() const { return static_cast<std::size_t>(singular_values.size()); }
  std::size_t d1() const { return static_cast<std::size_t>(phi1.rows()); }
  std::size_t d2() const { return static_cast<std::size_t>(phi2.rows()); }

  // Little-endian binary container: magic, d1, d2, k, kappas, flags,
  // singular values, then phi1 and phi2 row-major as 64-bit floats.
  void Save(const std::filesystem::path& path) const;
  static CcaModel Load(const std::filesystem::path& path);
};

// Top-k SVD of (Cxx + k1 I)^{-1/2} Cxz (Czz + k2 I)^{-1/2}; the projections
// are the whitening maps applied to the singular vectors.
CcaModel SolveCca(const CovarianceSummary& summary, const CcaOptions& options);

// Phi1^T x.
Eigen::VectorXd ProjectSpelling(const CcaModel& model, const SparseVector& x);

EmbeddingTable EmbedPhrases(const CcaModel& model,
                            const std::vector<std::pair<std::string, SparseVector>>& spelling);

// Canonical spelling vector of every phrase that occurs in the views.
std::vector<std::pair<std::string, SparseVector>> PhraseSpellingVectors(const OccurrenceSet& set,
                                                                        const ViewSpace& space);

}  // namespace forge
