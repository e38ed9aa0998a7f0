#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mlc/core.hpp"
#include "mlc/estimators.hpp"
#include "mlc/fpredict.hpp"

namespace mlc {

// ---- Dataset files ----------------------------------------------------------
//
// UTF-8 text, optional header "#meta N=<int> D=<int> L=<int>", then one line
// per instance: comma-separated label ids (possibly empty), a single TAB,
// space-separated "index:value" pairs with strictly increasing indices.
// Values are rendered with the shortest round-trip decimal.

MultiLabelDataset parse_dataset(const std::string& path);
MultiLabelDataset parse_dataset_text(const std::string& text, const std::string& origin = "<text>");
std::string format_dataset(const MultiLabelDataset& dataset);
void write_dataset(const MultiLabelDataset& dataset, const std::string& path);

/// Deterministic shuffle under `seed`; validation gets round(fraction * N)
/// rows, the rest go to training. Parts are disjoint with union = original.
std::pair<MultiLabelDataset, MultiLabelDataset> split_train_validation(
    const MultiLabelDataset& dataset, double fraction, std::uint64_t seed);

// ---- Synthetic data ----------------------------------------------------------

struct SyntheticSpec {
  int n = 1000;
  int d = 100;
  int l = 8;
  int k_true = 2;
  double noise_rate = 0.05;
  double irrelevant_feature_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  MultiLabelDataset dataset;
  std::vector<int> cluster_ids;                // per instance
  std::vector<char> feature_relevant;          // per feature, 1 = cluster-characteristic
  std::vector<LabelVector> cluster_label_sets; // per cluster
  Eigen::MatrixXd true_marginals;              // N x L, p(y_l = 1 | cluster)
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// ---- Model archives ----------------------------------------------------------
//
// Length-prefixed binary container: magic + version, a JSON text manifest
// (kind, hyperparameters, training-data path), the weight payload with only
// nonzero weights stored, and a trailing FNV-1a checksum.

enum class ModelKind { br, pcc, cbm, crf, lsf };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

using AnyModel = std::variant<BrModel, PccModel, CbmModel, CrfModel, LsfModel>;

ModelKind kind_of(const AnyModel& model);

struct ArchiveStats {
  std::uint64_t byte_size = 0;
  std::int64_t nonzero_weight_count = 0;
  int union_feature_count = 0;  // features with a nonzero weight in any base learner
};

ArchiveStats save_model(const AnyModel& model, const std::string& path,
                        const nlohmann::json& manifest = nlohmann::json::object());

struct LoadedModel {
  AnyModel model;
  nlohmann::json manifest;
};

LoadedModel load_model(const std::string& path);

/// Size accounting without writing a file.
ArchiveStats model_stats(const AnyModel& model);

}  // namespace mlc
