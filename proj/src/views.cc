#include "forge/views.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "forge/error.h"

namespace forge {
namespace {

std::size_t PositionSlot(int position) {
  for (std::size_t i = 0; i < kContextPositions.size(); ++i) {
    if (kContextPositions[i] == position) return i;
  }
  throw Error("invalid context position " + std::to_string(position));
}

std::ifstream OpenIn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return in;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

const std::string& CandidateOccurrence::ContextWord(int position) const {
  std::size_t slot = PositionSlot(position);
  return slot < 3 ? left[slot] : right[slot - 3];
}

bool OccurrenceSet::MajorityCapitalized(std::size_t phrase_id) const {
  return 2 * capitalized_counts.at(phrase_id) > counts.at(phrase_id);
}

OccurrenceCollector::OccurrenceCollector(const std::vector<CandidatePhrase>& candidates) {
  if (candidates.empty()) throw Error("collect_occurrences: empty candidate list");
  for (const auto& c : candidates) {
    std::size_t id = matcher_.Add(SplitWhitespace(c.lower));
    if (id == set_.phrases.size()) set_.phrases.push_back(c.lower);
  }
  set_.counts.assign(set_.phrases.size(), 0);
  set_.capitalized_counts.assign(set_.phrases.size(), 0);
}

void OccurrenceCollector::Add(const Sentence& sentence) {
  const auto lowers = sentence.Lowers();
  const std::string boundary(kBoundarySymbol);
  for (const auto& m : matcher_.FindAll(lowers)) {
    CandidateOccurrence occ;
    occ.phrase_id = m.phrase_id;
    for (std::size_t k = 0; k < 3; ++k) {
      // left[k] is position k - 3.
      std::size_t back = 3 - k;
      occ.left[k] = m.begin >= back ? lowers[m.begin - back] : boundary;
      std::size_t fwd = m.end + k;
      occ.right[k] = fwd < lowers.size() ? lowers[fwd] : boundary;
    }
    occ.capitalized = StartsUppercase(sentence.tokens[m.begin].text);
    occ.locator = Locator{sentence.doc_id, sentence.index, m.begin, m.end};
    ++set_.counts[m.phrase_id];
    if (occ.capitalized) ++set_.capitalized_counts[m.phrase_id];
    set_.occurrences.push_back(std::move(occ));
  }
}

OccurrenceSet OccurrenceCollector::Finish() && { return std::move(set_); }

OccurrenceSet CollectOccurrences(const std::vector<Sentence>& sentences,
                                 const std::vector<CandidatePhrase>& candidates) {
  OccurrenceCollector collector(candidates);
  for (const auto& s : sentences) collector.Add(s);
  return std::move(collector).Finish();
}

std::vector<CandidatePhrase> WordCandidates(const VocabStats& vocab) {
  std::vector<CandidatePhrase> out;
  for (const auto& [word, count] : vocab.counts) {
    CandidatePhrase c;
    c.tokens = {word};
    c.lower = word;
    c.freq = count;
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.freq > b.freq; });
  return out;
}

std::size_t FeatureIndex::Add(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  if (frozen_) throw LookupError("feature index is frozen; unseen feature '" + std::string(name) + "'");
  names_.emplace_back(name);
  ids_.emplace(names_.back(), names_.size() - 1);
  return names_.size() - 1;
}

std::optional<std::size_t> FeatureIndex::Find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t FeatureIndex::Lookup(std::string_view name) const {
  auto id = Find(name);
  if (!id) throw LookupError("unknown feature '" + std::string(name) + "'");
  return *id;
}

const std::string& FeatureIndex::Name(std::size_t id) const {
  if (id >= names_.size()) throw LookupError("feature id out of range: " + std::to_string(id));
  return names_[id];
}

void FeatureIndex::Save(const std::filesystem::path& path) const {
  auto out = OpenOut(path);
  for (std::size_t i = 0; i < names_.size(); ++i) out << i << '\t' << names_[i] << '\n';
}

FeatureIndex FeatureIndex::Load(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  FeatureIndex index;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error("bad index line in " + path.string());
    std::size_t id = std::stoul(line.substr(0, tab));
    if (id != index.size()) throw Error("non-dense index ids in " + path.string());
    index.Add(line.substr(tab + 1));
  }
  index.Freeze();
  return index;
}

SparseVector SparseVector::FromUnsorted(std::vector<std::pair<std::size_t, double>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVector v;
  for (const auto& [col, value] : entries) {
    if (!v.entries_.empty() && v.entries_.back().first == col) {
      v.entries_.back().second += value;
    } else {
      v.entries_.emplace_back(col, value);
    }
  }
  std::erase_if(v.entries_, [](const auto& e) { return e.second == 0.0; });
  return v;
}

std::string SpellingFeatureName(std::string_view phrase) {
  return "phrase=" + std::string(phrase);
}

std::string ContextFeatureName(int position, std::string_view word) {
  std::string name = position > 0 ? "+" + std::to_string(position) : std::to_string(position);
  return name + "=" + std::string(word);
}

bool ViewSpace::IsReservedContext(std::size_t column) const {
  return std::find(oov_columns.begin(), oov_columns.end(), column) != oov_columns.end();
}

SparseVector SpellingVector(std::string_view phrase, bool capitalized, const ViewSpace& space) {
  std::vector<std::pair<std::size_t, double>> entries;
  entries.emplace_back(space.spelling.Lookup(SpellingFeatureName(phrase)), 1.0);
  if (capitalized) entries.emplace_back(space.caps_column, 1.0);
  return SparseVector::FromUnsorted(std::move(entries));
}

SparseVector FeaturizeSpelling(const CandidateOccurrence& occ, const OccurrenceSet& set,
                               const ViewSpace& space) {
  return SpellingVector(set.phrases.at(occ.phrase_id), set.MajorityCapitalized(occ.phrase_id),
                        space);
}

SparseVector FeaturizeContext(const CandidateOccurrence& occ, const ViewSpace& space) {
  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t slot = 0; slot < kContextPositions.size(); ++slot) {
    int position = kContextPositions[slot];
    auto id = space.context.Find(ContextFeatureName(position, occ.ContextWord(position)));
    entries.emplace_back(id ? *id : space.oov_columns[slot], 1.0);
  }
  return SparseVector::FromUnsorted(std::move(entries));
}

DesignMatrices BuildDesignMatrices(const OccurrenceSet& set) {
  const std::size_t n = set.occurrences.size();
  if (n == 0) throw Error("build_design_matrices: no occurrences (CCA undefined)");

  DesignMatrices out;
  ViewSpace& space = out.space;
  for (std::size_t p = 0; p < set.phrases.size(); ++p) {
    if (set.counts[p] > 0) space.spelling.Add(SpellingFeatureName(set.phrases[p]));
  }
  space.caps_column = space.spelling.Add(kCapsFeature);
  space.spelling.Freeze();
  for (const auto& occ : set.occurrences) {
    for (int position : kContextPositions) {
      space.context.Add(ContextFeatureName(position, occ.ContextWord(position)));
    }
  }
  for (std::size_t slot = 0; slot < kContextPositions.size(); ++slot) {
    space.oov_columns[slot] = space.context.Add(ContextFeatureName(kContextPositions[slot], kOovWord));
  }
  space.context.Freeze();

  std::vector<Eigen::Triplet<double>> xt;
  std::vector<Eigen::Triplet<double>> zt;
  xt.reserve(2 * n);
  zt.reserve(6 * n);
  for (std::size_t row = 0; row < n; ++row) {
    const auto& occ = set.occurrences[row];
    const SparseVector x = FeaturizeSpelling(occ, set, space);
    const SparseVector z = FeaturizeContext(occ, space);
    for (const auto& [col, v] : x.entries()) {
      xt.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
    }
    for (const auto& [col, v] : z.entries()) {
      zt.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
    }
  }
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(space.d1()));
  out.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(space.d2()));
  out.x.setFromTriplets(xt.begin(), xt.end());
  out.z.setFromTriplets(zt.begin(), zt.end());
  return out;
}

void WriteTriplets(const std::filesystem::path& path, const SparseRowMatrix& m) {
  auto out = OpenOut(path);
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

SparseRowMatrix ReadTriplets(const std::filesystem::path& path) {
  auto in = OpenIn(path);
  long rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw Error("bad triplet header in " + path.string());
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (long i = 0; i < nnz; ++i) {
    long r = 0, c = 0;
    double v = 0;
    if (!(in >> r >> c >> v)) throw Error("truncated triplet file " + path.string());
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw Error("triplet out of range in " + path.string());
    }
    triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  SparseRowMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

void SaveViews(const std::filesystem::path& dir, const OccurrenceSet& set,
               const DesignMatrices& matrices) {
  std::filesystem::create_directories(dir);
  WriteTriplets(dir / "spelling.mtx", matrices.x);
  WriteTriplets(dir / "context.mtx", matrices.z);
  matrices.space.spelling.Save(dir / "spelling.index");
  matrices.space.context.Save(dir / "context.index");
  {
    auto out = OpenOut(dir / "phrases.tsv");
    for (std::size_t p = 0; p < set.phrases.size(); ++p) {
      out << set.phrases[p] << '\t' << set.counts[p] << '\t' << set.capitalized_counts[p] << '\n';
    }
  }
  auto out = OpenOut(dir / "occurrences.tsv");
  for (std::size_t row = 0; row < set.occurrences.size(); ++row) {
    const auto& o = set.occurrences[row];
    out << row << '\t' << o.locator.doc_id << '\t' << o.locator.sentence << '\t'
        << o.locator.begin << '\t' << o.locator.end << '\t' << o.phrase_id << '\t'
        << (o.capitalized ? 1 : 0);
    for (const auto& w : o.left) out << '\t' << w;
    for (const auto& w : o.right) out << '\t' << w;
    out << '\n';
  }
}

OccurrenceSet LoadOccurrences(const std::filesystem::path& dir) {
  OccurrenceSet set;
  {
    auto in = OpenIn(dir / "phrases.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = Split(line, '\t');
      if (f.size() != 3) throw Error("bad phrases.tsv line: " + line);
      set.phrases.push_back(f[0]);
      set.counts.push_back(std::stoull(f[1]));
      set.capitalized_counts.push_back(std::stoull(f[2]));
    }
  }
  auto in = OpenIn(dir / "occurrences.tsv");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = Split(line, '\t');
    if (f.size() != 13) throw Error("bad occurrences.tsv line: " + line);
    if (std::stoul(f[0]) != set.occurrences.size()) throw Error("occurrences.tsv rows out of order");
    CandidateOccurrence o;
    o.locator = Locator{f[1], std::stoul(f[2]), std::stoul(f[3]), std::stoul(f[4])};
    o.phrase_id = std::stoul(f[5]);
    if (o.phrase_id >= set.phrases.size()) throw Error("occurrences.tsv: phrase id out of range");
    o.capitalized = f[6] == "1";
    for (std::size_t k = 0; k < 3; ++k) {
      o.left[k] = f[7 + k];
      o.right[k] = f[10 + k];
    }
    set.occurrences.push_back(std::move(o));
  }
  return set;
}

ViewData LoadViews(const std::filesystem::path& dir) {
  ViewData data;
  data.occurrences = LoadOccurrences(dir);
  data.matrices.x = ReadTriplets(dir / "spelling.mtx");
  data.matrices.z = ReadTriplets(dir / "context.mtx");
  auto& space = data.matrices.space;
  space.spelling = FeatureIndex::Load(dir / "spelling.index");
  space.context = FeatureIndex::Load(dir / "context.index");
  space.caps_column = space.spelling.Lookup(kCapsFeature);
  for (std::size_t slot = 0; slot < kContextPositions.size(); ++slot) {
    space.oov_columns[slot] =
        space.context.Lookup(ContextFeatureName(kContextPositions[slot], kOovWord));
  }
  if (static_cast<std::size_t>(data.matrices.x.rows()) != data.occurrences.occurrences.size() ||
      data.matrices.x.rows() != data.matrices.z.rows()) {
    throw Error("views: row counts of matrices and locator file disagree");
  }
  return data;
}

}  // namespace forge
