#include "forge/embeddings.h"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "forge/error.h"
#include "forge/text.h"

namespace forge {

void EmbeddingTable::Add(const std::string& phrase, Eigen::VectorXd vector) {
  if (phrases_.empty()) {
    dim_ = static_cast<std::size_t>(vector.size());
  } else if (static_cast<std::size_t>(vector.size()) != dim_) {
    throw Error("embedding table: dimension mismatch for '" + phrase + "'");
  }
  if (index_.count(phrase)) throw Error("embedding table: duplicate phrase '" + phrase + "'");
  index_.emplace(phrase, phrases_.size());
  phrases_.push_back(phrase);
  vectors_.push_back(std::move(vector));
}

const Eigen::VectorXd* EmbeddingTable::Find(const std::string& phrase) const {
  auto it = index_.find(phrase);
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

const Eigen::VectorXd& EmbeddingTable::Lookup(const std::string& phrase) const {
  const Eigen::VectorXd* v = Find(phrase);
  if (!v) throw LookupError("no embedding for phrase '" + phrase + "'");
  return *v;
}

EmbeddingTable EmbeddingTable::Truncated(std::size_t k) const {
  if (k > dim_) throw Error("cannot truncate embeddings of dimension " + std::to_string(dim_) +
                            " to " + std::to_string(k));
  EmbeddingTable out;
  for (std::size_t i = 0; i < phrases_.size(); ++i) {
    out.Add(phrases_[i], vectors_[i].head(static_cast<Eigen::Index>(k)));
  }
  return out;
}

double EmbeddingTable::MaxAbsValue() const {
  double best = 0.0;
  for (const auto& v : vectors_) {
    if (v.size() > 0) best = std::max(best, v.cwiseAbs().maxCoeff());
  }
  return best;
}

void EmbeddingTable::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < phrases_.size(); ++i) {
    out << phrases_[i];
    for (Eigen::Index j = 0; j < vectors_[i].size(); ++j) out << '\t' << vectors_[i](j);
    out << '\n';
  }
}

EmbeddingTable EmbeddingTable::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = Split(line, '\t');
    Eigen::VectorXd v(static_cast<Eigen::Index>(fields.size() - 1));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      v(static_cast<Eigen::Index>(j - 1)) = std::stod(fields[j]);
      if (!std::isfinite(v(static_cast<Eigen::Index>(j - 1)))) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": non-finite value");
      }
    }
    table.Add(fields[0], std::move(v));
  }
  return table;
}

}  // namespace forge
