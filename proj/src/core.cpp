#include "mlc/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlc {

SparseInstance::SparseInstance(std::vector<Entry> entries, int dimension)
    : entries_(std::move(entries)), dimension_(dimension) {
  if (dimension_ <= 0) throw std::invalid_argument("SparseInstance: dimension must be positive");
  int prev = -1;
  for (const Entry& e : entries_) {
    if (e.index <= prev) throw std::invalid_argument("SparseInstance: indices must be strictly increasing");
    if (e.index >= dimension_) throw std::invalid_argument("SparseInstance: index out of range");
    if (!std::isfinite(e.value)) throw std::invalid_argument("SparseInstance: non-finite value");
    if (e.value == 0.0) throw std::invalid_argument("SparseInstance: explicit zero entry");
    prev = e.index;
  }
}

double SparseInstance::dot(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  double s = 0.0;
  for (const Entry& e : entries_) s += w[e.index] * e.value;
  return s;
}

LabelVector::LabelVector(std::vector<int> labels, int label_space_size)
    : labels_(std::move(labels)), label_space_size_(label_space_size) {
  if (label_space_size_ <= 0) throw std::invalid_argument("LabelVector: label space must be positive");
  int prev = -1;
  for (int l : labels_) {
    if (l <= prev) throw std::invalid_argument("LabelVector: ids must be strictly increasing");
    if (l >= label_space_size_) throw std::invalid_argument("LabelVector: id out of range");
    prev = l;
  }
  if (!labels_.empty() && labels_.front() < 0) throw std::invalid_argument("LabelVector: negative id");
}

LabelVector LabelVector::from_mask(std::uint64_t mask, int label_space_size) {
  std::vector<int> ids;
  for (int l = 0; l < label_space_size; ++l)
    if (mask >> l & 1) ids.push_back(l);
  return LabelVector(std::move(ids), label_space_size);
}

bool LabelVector::contains(int label) const {
  return std::binary_search(labels_.begin(), labels_.end(), label);
}

std::uint64_t LabelVector::mask() const {
  if (label_space_size_ > 63) throw std::logic_error("LabelVector::mask: label space too large");
  std::uint64_t m = 0;
  for (int l : labels_) m |= std::uint64_t{1} << l;
  return m;
}

std::string LabelVector::canonical_key() const {
  std::string key;
  for (size_t i = 0; i < labels_.size(); ++i) {
    if (i) key += ',';
    key += std::to_string(labels_[i]);
  }
  return key;
}

int cardinality(const LabelVector& y) { return y.cardinality(); }

void MultiLabelDataset::validate() const {
  if (instances.empty()) throw std::invalid_argument("dataset: empty");
  if (instances.size() != labels.size()) throw std::invalid_argument("dataset: instance/label count mismatch");
  for (const SparseInstance& x : instances)
    if (x.dimension() != num_features) throw std::invalid_argument("dataset: instance dimension mismatch");
  for (const LabelVector& y : labels)
    if (y.label_space_size() != num_labels) throw std::invalid_argument("dataset: label space mismatch");
}

SupportSet::SupportSet(std::vector<LabelVector> combinations, std::vector<int> counts)
    : combinations_(std::move(combinations)), counts_(std::move(counts)) {
  if (combinations_.size() != counts_.size()) throw std::invalid_argument("SupportSet: size mismatch");
  for (size_t i = 0; i < combinations_.size(); ++i) {
    if (counts_[i] < 1) throw std::invalid_argument("SupportSet: count < 1");
    auto [it, inserted] = index_.emplace(combinations_[i].canonical_key(), static_cast<int>(i));
    if (!inserted) throw std::invalid_argument("SupportSet: duplicate combination");
    total_count_ += counts_[i];
  }
}

bool SupportSet::contains(const LabelVector& y) const { return find(y) >= 0; }

int SupportSet::find(const LabelVector& y) const {
  auto it = index_.find(y.canonical_key());
  return it == index_.end() ? -1 : it->second;
}

SupportSet build_support(const MultiLabelDataset& dataset) {
  dataset.validate();
  std::vector<LabelVector> combos;
  std::vector<int> counts;
  std::unordered_map<std::string, int> seen;
  for (const LabelVector& y : dataset.labels) {
    auto [it, inserted] = seen.emplace(y.canonical_key(), static_cast<int>(combos.size()));
    if (inserted) {
      combos.push_back(y);
      counts.push_back(1);
    } else {
      ++counts[it->second];
    }
  }
  return SupportSet(std::move(combos), std::move(counts));
}

}  // namespace mlc
