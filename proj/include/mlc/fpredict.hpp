#pragma once

#include <vector>

#include <Eigen/Core>

#include "mlc/core.hpp"
#include "mlc/estimators.hpp"
#include "mlc/linreg.hpp"

namespace mlc {

/// A renormalized distribution over an explicit list of label combinations.
struct SupportPosterior {
  std::vector<LabelVector> combinations;
  std::vector<double> probabilities;
};

/// The GFM input: p(l, s-1) = p(y_l=1, |y|=s | x) plus p(y=0|x).
struct MarginalMatrix {
  int num_labels = 0;
  Eigen::MatrixXd p;  // L x L
  double p_empty = 0.0;
};

struct FPrediction {
  LabelVector labels;
  double expected_f1 = 0.0;
  int cardinality = 0;
};

/// Renormalizes exp(log_joint) over exactly the support combinations,
/// computed in log space with max-subtraction.
SupportPosterior support_posterior(const JointEstimator& estimator, const SparseInstance& x,
                                   const SupportSet& support);

MarginalMatrix marginals_from_posterior(const SupportPosterior& posterior, int num_labels);

MarginalMatrix marginals_from_samples(const std::vector<LabelVector>& samples, int num_labels);

/// General F-measure maximizer: O(L^3), exact given the marginal matrix.
/// Ties break toward the smaller label id and the smaller cardinality.
FPrediction gfm(const MarginalMatrix& m);

// ---- Brute-force oracle (enumeration over all 2^L combinations) ------------

/// probs_by_mask[mask] = p(y = mask | x), indexed by label bitmask. L <= 20.
double brute_force_expected_f1(const std::vector<double>& probs_by_mask, int num_labels,
                               const LabelVector& candidate);
FPrediction brute_force_best(const std::vector<double>& probs_by_mask, int num_labels);

/// Expands a posterior over explicit combinations into a dense 2^L table.
std::vector<double> posterior_to_mask_table(const SupportPosterior& posterior, int num_labels);

// ---- Baseline predictors ----------------------------------------------------

/// Highest-probability support combination; ties break toward the
/// lexicographically smallest canonical key.
LabelVector support_map(const SupportPosterior& posterior);

/// BR MAP: include label l iff p(y_l=1|x) > 0.5.
LabelVector br_map(const BrModel& model, const SparseInstance& x);

/// Native MAP prediction per estimator: BR thresholds marginals, PCC runs
/// beam search, CBM and CRF take the support-restricted MAP.
LabelVector map_predict(const JointEstimator& estimator, const SparseInstance& x,
                        const SupportSet* support, int beam_width);

// ---- LSF: direct estimation of the GFM marginals ---------------------------

/// Factored direct estimator: p(y_l=1|x) by a binary model, p(|y|=s|x,y_l=1)
/// by a multinomial model per label, p(y=0|x) by one extra binary model.
struct LsfModel {
  std::vector<LinearModel> marginal_models;     // L binary models
  std::vector<LinearModel> cardinality_models;  // L multinomial models, C = L
  LinearModel empty_model;                      // binary model for 1[y = {}]
  int num_labels = 0;
  int feature_dim = 0;
};

LsfModel lsf_train(const MultiLabelDataset& dataset, const ElasticNetConfig& en,
                   const EarlyStopConfig& stop);

/// May violate the proper-distribution coherence identities; fed to GFM as-is.
MarginalMatrix lsf_marginals(const LsfModel& model, const SparseInstance& x);

}  // namespace mlc
