#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlc/core.hpp"
#include "mlc/dataio.hpp"
#include "mlc/fpredict.hpp"
#include "mlc/metrics.hpp"

namespace mlc {

enum class ClassifierKind { br, pcc, cbm, crf, lsf };
enum class PredictionStrategy { map, support_map, support_gfm, sample_gfm, gfm_direct };

std::string classifier_name(ClassifierKind kind);
ClassifierKind classifier_from_name(const std::string& name);
std::string strategy_name(PredictionStrategy s);
PredictionStrategy strategy_from_name(const std::string& name);

struct TrainSettings {
  ClassifierKind classifier = ClassifierKind::br;
  ElasticNetConfig en;
  EarlyStopConfig stop;
  bool early_stop = false;
  double validation_fraction = 0.2;
  PredictionStrategy validation_strategy = PredictionStrategy::support_gfm;
  int cbm_components = 20;
  std::vector<int> pcc_order;  // empty = native label-id order
  bool crf_pairwise = true;
  int beam_width = 10;
  int sample_count = 1000;
  std::uint64_t seed = 0;
};

struct PredictSettings {
  PredictionStrategy strategy = PredictionStrategy::support_gfm;
  int beam_width = 10;
  int sample_count = 1000;
  std::uint64_t seed = 0;
};

/// Trains the configured classifier. When early stopping is on, a validation
/// split is carved off `train` and the checkpoint metric is validation
/// instance-F1 under `validation_strategy`.
AnyModel train_classifier(const MultiLabelDataset& train, const TrainSettings& settings);

/// One prediction per instance under the chosen strategy. `support` is
/// required for strategies that restrict to support combinations (and for
/// CBM/CRF map, whose native MAP is support-restricted).
std::vector<LabelVector> predict_all(const AnyModel& model, const MultiLabelDataset& data,
                                     const SupportSet* support, const PredictSettings& settings);

double mean_f1(const AnyModel& model, const MultiLabelDataset& data, const SupportSet* support,
               const PredictSettings& settings);

// ---- Ablation ---------------------------------------------------------------

/// A letter combination from {L1, early stopping, support inference, GFM}.
struct RegCombo {
  std::string name;
  bool l1 = false;
  bool early_stop = false;
  bool support = false;
  bool gfm = false;
};

/// The paper-style table rows: No REG, L+E, L+E+S, L+E+G, All4.
std::vector<RegCombo> standard_combos();

struct AblationCell {
  std::string classifier;
  std::string combo;
  double mean_f1 = 0.0;
  bool failed = false;
  std::string error;
};

struct AblationSettings {
  std::vector<ClassifierKind> classifiers = {ClassifierKind::br, ClassifierKind::pcc,
                                             ClassifierKind::cbm, ClassifierKind::crf};
  std::vector<RegCombo> combos = standard_combos();
  int seeds = 3;
  double lambda = 1e-4;
  double alpha = 0.5;
  int cbm_components = 4;
  int max_iterations = 100;
  int beam_width = 10;
  int sample_count = 1000;
  bool crf_pairwise = true;
};

std::vector<AblationCell> run_ablation(const MultiLabelDataset& train,
                                       const MultiLabelDataset& test,
                                       const AblationSettings& settings);

// ---- Grid tuning ------------------------------------------------------------

struct GridCell {
  double lambda = 0.0;
  double alpha = 0.0;
  double validation_f1 = 0.0;
  bool failed = false;
  std::string error;
};

std::vector<GridCell> run_grid(const MultiLabelDataset& train, const MultiLabelDataset& validation,
                               const TrainSettings& base, const std::vector<double>& lambdas,
                               const std::vector<double>& alphas);

}  // namespace mlc
