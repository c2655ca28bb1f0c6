#include "forge/cca.h"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "forge/error.h"

namespace forge {
namespace {

constexpr std::array<char, 8> kModelMagic = {'F', 'G', 'C', 'C', 'A', '0', '0', '1'};

bool AllFinite(const Eigen::SparseMatrix<double>& m) {
  for (Eigen::Index j = 0; j < m.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
      if (!std::isfinite(it.value())) return false;
    }
  }
  return true;
}

// (C + kappa I)^{-1/2}, either dense or diagonal.
class Whitener {
 public:
  Whitener(const Eigen::SparseMatrix<double>& second_moment, const Eigen::VectorXd& mean,
           bool center, double kappa, bool relative, std::size_t full_max_dim,
           const char* view) {
    const Eigen::Index d = second_moment.rows();
    diagonal_ = static_cast<std::size_t>(d) > full_max_dim;
    if (diagonal_) {
      Eigen::VectorXd diag = second_moment.diagonal();
      if (center) diag -= mean.cwiseAbs2();
      kappa_ = relative ? kappa * diag.sum() / static_cast<double>(d) : kappa;
      CheckKappa(view);
      scale_ = (diag.array() + kappa_).cwiseMax(0.0).sqrt().inverse().matrix();
      spdlog::warn("cca: {} view has {} columns (> {}); using diagonal whitening", view, d,
                   full_max_dim);
      return;
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd(second_moment);
    if (center) cov -= mean * mean.transpose();
    kappa_ = relative ? kappa * cov.trace() / static_cast<double>(d) : kappa;
    CheckKappa(view);
    cov.diagonal().array() += kappa_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) {
      throw Error(std::string("cca: eigendecomposition failed for ") + view + " view");
    }
    Eigen::VectorXd inv_sqrt =
        eig.eigenvalues().cwiseMax(kappa_ * 1e-12).cwiseSqrt().cwiseInverse();
    dense_ = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  }

  Eigen::MatrixXd Apply(const Eigen::MatrixXd& m) const {
    if (diagonal_) return scale_.asDiagonal() * m;
    return dense_ * m;
  }

  double kappa() const { return kappa_; }
  bool diagonal() const { return diagonal_; }

 private:
  void CheckKappa(const char* view) const {
    if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) {
      throw Error(std::string("cca: whitening ridge for ") + view + " view must be positive");
    }
  }

  bool diagonal_ = false;
  double kappa_ = 0.0;
  Eigen::MatrixXd dense_;
  Eigen::VectorXd scale_;
};

template <typename T>
void WritePod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("cca model: truncated file");
  return value;
}

void WriteRowMajor(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) WritePod(out, m(i, j));
  }
}

Eigen::MatrixXd ReadRowMajor(std::ifstream& in, std::uint64_t rows, std::uint64_t cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = ReadPod<double>(in);
  }
  return m;
}

}  // namespace

void CovarianceSummary::Merge(const CovarianceSummary& other) {
  if (other.n == 0) return;
  if (n == 0) {
    *this = other;
    return;
  }
  if (other.sxx.rows() != sxx.rows() || other.szz.rows() != szz.rows()) {
    throw Error("covariance merge: view dimensions differ");
  }
  n += other.n;
  sxx += other.sxx;
  szz += other.szz;
  sxz += other.sxz;
  sx += other.sx;
  sz += other.sz;
}

CovarianceSummary AccumulateCovariance(const SparseRowMatrix& x, const SparseRowMatrix& z) {
  if (x.rows() != z.rows()) {
    throw Error("accumulate_covariance: X has " + std::to_string(x.rows()) + " rows, Z has " +
                std::to_string(z.rows()));
  }
  if (x.rows() == 0) throw Error("accumulate_covariance: no rows");
  Eigen::SparseMatrix<double> xc = x;
  Eigen::SparseMatrix<double> zc = z;
  CovarianceSummary s;
  s.n = static_cast<std::size_t>(x.rows());
  s.sxx = (xc.transpose() * xc).pruned();
  s.szz = (zc.transpose() * zc).pruned();
  s.sxz = (xc.transpose() * zc).pruned();
  s.sx = xc.transpose() * Eigen::VectorXd::Ones(x.rows());
  s.sz = zc.transpose() * Eigen::VectorXd::Ones(z.rows());
  return s;
}

CcaModel SolveCca(const CovarianceSummary& summary, const CcaOptions& options) {
  if (summary.n == 0) throw Error("solve_cca: empty covariance summary");
  const auto d1 = static_cast<std::size_t>(summary.sxx.rows());
  const auto d2 = static_cast<std::size_t>(summary.szz.rows());
  if (options.k == 0 || options.k > std::min(d1, d2)) {
    throw Error("solve_cca: k=" + std::to_string(options.k) + " exceeds min(d1, d2)=" +
                std::to_string(std::min(d1, d2)));
  }
  if (!(options.kappa > 0.0)) throw Error("solve_cca: kappa must be positive");
  if (!AllFinite(summary.sxx) || !AllFinite(summary.szz) || !AllFinite(summary.sxz) ||
      !summary.sx.allFinite() || !summary.sz.allFinite()) {
    throw Error("solve_cca: covariance summary has non-finite values");
  }

  const Eigen::VectorXd mean_x = summary.MeanX();
  const Eigen::VectorXd mean_z = summary.MeanZ();
  auto w1 = std::make_shared<Whitener>(summary.Cxx(), mean_x, options.center, options.kappa,
                                       options.kappa_relative, options.full_whitening_max_dim,
                                       "spelling");
  auto w2 = std::make_shared<Whitener>(summary.Czz(), mean_z, options.center, options.kappa,
                                       options.kappa_relative, options.full_whitening_max_dim,
                                       "context");
  auto cxz = std::make_shared<Eigen::SparseMatrix<double>>(summary.Cxz());
  const bool center = options.center;

  LinearOperator t;
  t.rows = static_cast<Eigen::Index>(d1);
  t.cols = static_cast<Eigen::Index>(d2);
  t.apply = [=](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    Eigen::MatrixXd y = w2->Apply(m);
    Eigen::MatrixXd out = *cxz * y;
    if (center) out -= mean_x * (mean_z.transpose() * y);
    return w1->Apply(out);
  };
  t.apply_transpose = [=](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    Eigen::MatrixXd y = w1->Apply(m);
    Eigen::MatrixXd out = cxz->transpose() * y;
    if (center) out -= mean_z * (mean_x.transpose() * y);
    return w2->Apply(out);
  };

  TruncatedSvd svd = RandomizedSvd(t, options.k, options.svd);
  CcaModel model;
  model.phi1 = w1->Apply(svd.u);
  model.phi2 = w2->Apply(svd.v);
  model.singular_values = svd.s;
  model.kappa1 = w1->kappa();
  model.kappa2 = w2->kappa();
  model.diagonal1 = w1->diagonal();
  model.diagonal2 = w2->diagonal();
  return model;
}

Eigen::VectorXd ProjectSpelling(const CcaModel& model, const SparseVector& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.phi1.cols());
  for (const auto& [col, value] : x.entries()) {
    if (col >= model.d1()) throw Error("spelling vector column outside the model's d1");
    out += value * model.phi1.row(static_cast<Eigen::Index>(col)).transpose();
  }
  return out;
}

EmbeddingTable EmbedPhrases(const CcaModel& model,
                            const std::vector<std::pair<std::string, SparseVector>>& spelling) {
  EmbeddingTable table;
  for (const auto& [phrase, x] : spelling) table.Add(phrase, ProjectSpelling(model, x));
  return table;
}

std::vector<std::pair<std::string, SparseVector>> PhraseSpellingVectors(const OccurrenceSet& set,
                                                                        const ViewSpace& space) {
  std::vector<std::pair<std::string, SparseVector>> out;
  for (std::size_t p = 0; p < set.phrases.size(); ++p) {
    if (set.counts[p] == 0) continue;
    out.emplace_back(set.phrases[p],
                     SpellingVector(set.phrases[p], set.MajorityCapitalized(p), space));
  }
  return out;
}

void CcaModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kModelMagic.data(), kModelMagic.size());
  WritePod<std::uint64_t>(out, d1());
  WritePod<std::uint64_t>(out, d2());
  WritePod<std::uint64_t>(out, k());
  WritePod(out, kappa1);
  WritePod(out, kappa2);
  WritePod<std::uint8_t>(out, diagonal1 ? 1 : 0);
  WritePod<std::uint8_t>(out, diagonal2 ? 1 : 0);
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) WritePod(out, singular_values(i));
  WriteRowMajor(out, phi1);
  WriteRowMajor(out, phi2);
  if (!out) throw Error("failed writing " + path.string());
}

CcaModel CcaModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kModelMagic) throw Error("not a CCA model file: " + path.string());
  CcaModel model;
  const auto d1 = ReadPod<std::uint64_t>(in);
  const auto d2 = ReadPod<std::uint64_t>(in);
  const auto k = ReadPod<std::uint64_t>(in);
  model.kappa1 = ReadPod<double>(in);
  model.kappa2 = ReadPod<double>(in);
  model.diagonal1 = ReadPod<std::uint8_t>(in) != 0;
  model.diagonal2 = ReadPod<std::uint8_t>(in) != 0;
  model.singular_values.resize(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < model.singular_values.size(); ++i) {
    model.singular_values(i) = ReadPod<double>(in);
  }
  model.phi1 = ReadRowMajor(in, d1, k);
  model.phi2 = ReadRowMajor(in, d2, k);
  return model;
}

}  // namespace forge
