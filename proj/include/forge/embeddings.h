#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace forge {

// Phrase (lowercase, space-joined tokens) -> k-dimensional vector, in
// insertion order.
class EmbeddingTable {
 public:
  void Add(const std::string& phrase, Eigen::VectorXd vector);

  const Eigen::VectorXd* Find(const std::string& phrase) const;
  // Throws LookupError for unknown phrases.
  const Eigen::VectorXd& Lookup(const std::string& phrase) const;

  const std::vector<std::string>& phrases() const { return phrases_; }
  const Eigen::VectorXd& vector(std::size_t i) const { return vectors_[i]; }
  std::size_t size() const { return phrases_.size(); }
  std::size_t dim() const { return dim_; }

  // The first k dimensions of every vector.
  EmbeddingTable Truncated(std::size_t k) const;
  // Largest absolute coordinate over the table; 0 when empty.
  double MaxAbsValue() const;

  // TSV: phrase \t v1 \t ... \t vk
  void Save(const std::filesystem::path& path) const;
  static EmbeddingTable Load(const std::filesystem::path& path);

 private:
  std::vector<std::string> phrases_;
  std::vector<Eigen::VectorXd> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dim_ = 0;
};

}  // namespace forge
