#pragma once

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "mlc/core.hpp"
#include "mlc/linreg.hpp"

namespace mlc {

/// Common capability contract of the joint estimators p(y|x).
/// BR, PCC and CBM expose proper (normalized) log joints; CRF exposes the
/// unnormalized log score, its normalization lives in the support posterior.
class JointEstimator {
 public:
  virtual ~JointEstimator() = default;
  virtual int num_labels() const = 0;
  virtual int feature_dim() const = 0;
  virtual double log_joint(const SparseInstance& x, const LabelVector& y) const = 0;
  virtual bool supports_sampling() const { return true; }
  virtual LabelVector sample(const SparseInstance& x, std::mt19937_64& rng) const = 0;
};

/// Binary relevance: p(y|x) = prod_l p(y_l|x), one logistic regression per
/// label.
class BrModel : public JointEstimator {
 public:
  BrModel() = default;
  explicit BrModel(std::vector<LinearModel> label_models);

  int num_labels() const override { return static_cast<int>(models_.size()); }
  int feature_dim() const override { return models_.empty() ? 0 : models_[0].dimension(); }
  double log_joint(const SparseInstance& x, const LabelVector& y) const override;
  LabelVector sample(const SparseInstance& x, std::mt19937_64& rng) const override;

  /// p(y_l = 1 | x).
  double marginal(int label, const SparseInstance& x) const;
  const std::vector<LinearModel>& label_models() const { return models_; }

 private:
  std::vector<LinearModel> models_;
};

/// Probabilistic classifier chain: chain-rule factorization in a fixed label
/// order; the model at chain position j sees the D features followed by the
/// j previous labels as 0/1 features.
class PccModel : public JointEstimator {
 public:
  PccModel() = default;
  PccModel(std::vector<int> order, std::vector<LinearModel> chain_models);

  int num_labels() const override { return static_cast<int>(order_.size()); }
  int feature_dim() const override;
  double log_joint(const SparseInstance& x, const LabelVector& y) const override;
  LabelVector sample(const SparseInstance& x, std::mt19937_64& rng) const override;

  const std::vector<int>& order() const { return order_; }
  const std::vector<LinearModel>& chain_models() const { return models_; }

  /// p(y_{order[j]} = 1 | x, previous chain labels).
  double conditional(int position, const SparseInstance& x,
                     const std::vector<char>& previous_bits) const;

 private:
  std::vector<int> order_;
  std::vector<LinearModel> models_;
};

/// Conditional Bernoulli mixture: p(y|x) = sum_k pi(z=k|x) prod_l b(y_l|x,k).
class CbmModel : public JointEstimator {
 public:
  CbmModel() = default;
  CbmModel(LinearModel gating, std::vector<std::vector<LinearModel>> components);

  int num_labels() const override {
    return components_.empty() ? 0 : static_cast<int>(components_[0].size());
  }
  int feature_dim() const override { return gating_.dimension(); }
  double log_joint(const SparseInstance& x, const LabelVector& y) const override;
  LabelVector sample(const SparseInstance& x, std::mt19937_64& rng) const override;

  int num_components() const { return static_cast<int>(components_.size()); }
  Eigen::VectorXd mixing_weights(const SparseInstance& x) const;
  const LinearModel& gating() const { return gating_; }
  const std::vector<std::vector<LinearModel>>& components() const { return components_; }

 private:
  LinearModel gating_;                               // C = K
  std::vector<std::vector<LinearModel>> components_; // K x L binary models
};

/// Pairwise CRF with unary feature-label weights (plus one bias weight per
/// label) and four indicator weights per unordered label pair l < m. The
/// partition function is computed over the stored support set, never stored.
class CrfModel : public JointEstimator {
 public:
  CrfModel() = default;
  CrfModel(int num_labels, int feature_dim, bool include_pairwise, SupportSet support);

  int num_labels() const override { return num_labels_; }
  int feature_dim() const override { return feature_dim_; }
  /// Unnormalized log score of (x, y).
  double log_joint(const SparseInstance& x, const LabelVector& y) const override;
  bool supports_sampling() const override { return false; }
  LabelVector sample(const SparseInstance&, std::mt19937_64&) const override;

  bool include_pairwise() const { return include_pairwise_; }
  const SupportSet& support() const { return support_; }

  /// L x (D+1) unary weights; the last column is the per-label bias.
  Eigen::MatrixXd& unary() { return unary_; }
  const Eigen::MatrixXd& unary() const { return unary_; }
  /// numPairs x 4 pairwise weights, indicator order (00, 01, 10, 11).
  Eigen::MatrixXd& pairwise() { return pairwise_; }
  const Eigen::MatrixXd& pairwise() const { return pairwise_; }
  int pair_index(int l, int m) const;  // requires l < m
  int num_pairs() const { return static_cast<int>(pairwise_.rows()); }

  /// Per-label unary activations w_l . x + bias_l.
  Eigen::VectorXd unary_activations(const SparseInstance& x) const;
  /// Unnormalized log scores of every support combination.
  Eigen::VectorXd support_scores(const SparseInstance& x) const;

 private:
  int num_labels_ = 0;
  int feature_dim_ = 0;
  bool include_pairwise_ = false;
  Eigen::MatrixXd unary_;     // L x (D+1)
  Eigen::MatrixXd pairwise_;  // L(L-1)/2 x 4
  SupportSet support_;
};

// ---- Training -------------------------------------------------------------

BrModel br_train(const MultiLabelDataset& dataset, const ElasticNetConfig& en,
                 const EarlyStopConfig& stop,
                 const std::function<double(const BrModel&)>& validation_score = {});

PccModel pcc_train(const MultiLabelDataset& dataset, const std::vector<int>& order,
                   const ElasticNetConfig& en, const EarlyStopConfig& stop,
                   const std::function<double(const PccModel&)>& validation_score = {});

struct CbmTrainResult {
  CbmModel model;
  std::vector<double> loglik_trace;  // observed-data log-likelihood per EM iteration
  int best_iteration = 0;
  int degenerate_responsibility_count = 0;
};

struct CbmOptions {
  int em_iterations = 30;
  int inner_iterations = 5;  // capped M-step coordinate-descent passes
  double init_noise = 0.1;
};

CbmTrainResult cbm_train_em(const MultiLabelDataset& dataset, int num_components,
                            const ElasticNetConfig& en, const EarlyStopConfig& stop,
                            std::uint64_t seed, const CbmOptions& options = {},
                            const std::function<double(const CbmModel&)>& validation_score = {});

CrfModel crf_train(const MultiLabelDataset& dataset, const SupportSet& support,
                   bool include_pairwise, double l2_lambda, const EarlyStopConfig& stop,
                   int max_iterations = 200,
                   const std::function<double(const CrfModel&)>& validation_score = {});

/// CRF support-restricted training objective and its gradient, exposed for
/// verification against finite differences.
double crf_objective(const CrfModel& model, const MultiLabelDataset& dataset, double l2_lambda);
void crf_gradient(const CrfModel& model, const MultiLabelDataset& dataset, double l2_lambda,
                  Eigen::MatrixXd& grad_unary, Eigen::MatrixXd& grad_pairwise);

// ---- Inference ------------------------------------------------------------

/// Beam search over the chain order; keeps `beam_width` highest-probability
/// partial assignments, returns the best complete one.
LabelVector pcc_map_beam(const PccModel& model, const SparseInstance& x, int beam_width);

/// Softmax of the CRF scores over its support combinations; sums to 1.
Eigen::VectorXd crf_support_distribution(const CrfModel& model, const SparseInstance& x);

}  // namespace mlc
