#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace mlc {

/// One document as a sparse feature vector in R^D.
/// Entries are sorted by strictly increasing feature index; zero values are
/// never stored and all values must be finite.
class SparseInstance {
 public:
  struct Entry {
    int index;
    double value;
    bool operator==(const Entry&) const = default;
  };

  SparseInstance() = default;
  SparseInstance(std::vector<Entry> entries, int dimension);

  int dimension() const { return dimension_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Inner product with a dense weight vector of size >= dimension().
  double dot(const Eigen::Ref<const Eigen::VectorXd>& w) const;

  bool operator==(const SparseInstance&) const = default;

 private:
  std::vector<Entry> entries_;
  int dimension_ = 0;
};

/// A label combination y in {0,1}^L stored as a sorted set of label ids.
class LabelVector {
 public:
  LabelVector() = default;
  LabelVector(std::vector<int> labels, int label_space_size);

  /// Builds from a bitmask; bit l set means label l present. L <= 63.
  static LabelVector from_mask(std::uint64_t mask, int label_space_size);

  int label_space_size() const { return label_space_size_; }
  const std::vector<int>& labels() const { return labels_; }
  int cardinality() const { return static_cast<int>(labels_.size()); }
  bool empty() const { return labels_.empty(); }
  bool contains(int label) const;

  /// Bitmask form; requires label_space_size() <= 63.
  std::uint64_t mask() const;

  /// Comma-joined sorted id list, e.g. "0,2,5". Empty set -> "".
  std::string canonical_key() const;

  bool operator==(const LabelVector&) const = default;

 private:
  std::vector<int> labels_;
  int label_space_size_ = 0;
};

int cardinality(const LabelVector& y);

struct MultiLabelDataset {
  std::vector<SparseInstance> instances;
  std::vector<LabelVector> labels;
  int num_features = 0;
  int num_labels = 0;
  std::vector<std::string> label_names;    // optional
  std::vector<std::string> feature_names;  // optional

  int size() const { return static_cast<int>(instances.size()); }

  /// Throws std::invalid_argument if any structural invariant is violated.
  void validate() const;
};

/// Deduplicated label combinations observed in a training set, with counts.
class SupportSet {
 public:
  SupportSet() = default;
  SupportSet(std::vector<LabelVector> combinations, std::vector<int> counts);

  const std::vector<LabelVector>& combinations() const { return combinations_; }
  const std::vector<int>& counts() const { return counts_; }
  int size() const { return static_cast<int>(combinations_.size()); }
  int total_count() const { return total_count_; }

  bool contains(const LabelVector& y) const;
  /// Index of a combination, or -1 if absent.
  int find(const LabelVector& y) const;

 private:
  std::vector<LabelVector> combinations_;
  std::vector<int> counts_;
  std::unordered_map<std::string, int> index_;
  int total_count_ = 0;
};

SupportSet build_support(const MultiLabelDataset& dataset);

}  // namespace mlc
