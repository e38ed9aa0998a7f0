#include "mlc/fpredict.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mlc {

SupportPosterior support_posterior(const JointEstimator& estimator, const SparseInstance& x,
                                   const SupportSet& support) {
  if (support.size() == 0) throw std::invalid_argument("support_posterior: empty support");
  SupportPosterior post;
  post.combinations = support.combinations();
  Eigen::VectorXd log_scores(support.size());
  for (int j = 0; j < support.size(); ++j)
    log_scores[j] = estimator.log_joint(x, post.combinations[j]);
  const double m = log_scores.maxCoeff();
  Eigen::VectorXd w = (log_scores.array() - m).exp();
  w /= w.sum();
  post.probabilities.assign(w.data(), w.data() + w.size());
  return post;
}

MarginalMatrix marginals_from_posterior(const SupportPosterior& posterior, int num_labels) {
  if (posterior.combinations.size() != posterior.probabilities.size())
    throw std::invalid_argument("marginals_from_posterior: size mismatch");
  MarginalMatrix m;
  m.num_labels = num_labels;
  m.p = Eigen::MatrixXd::Zero(num_labels, num_labels);
  for (size_t j = 0; j < posterior.combinations.size(); ++j) {
    const LabelVector& y = posterior.combinations[j];
    const double prob = posterior.probabilities[j];
    const int s = y.cardinality();
    if (s == 0) {
      m.p_empty += prob;
      continue;
    }
    for (int l : y.labels()) m.p(l, s - 1) += prob;
  }
  return m;
}

MarginalMatrix marginals_from_samples(const std::vector<LabelVector>& samples, int num_labels) {
  if (samples.empty()) throw std::invalid_argument("marginals_from_samples: no samples");
  MarginalMatrix m;
  m.num_labels = num_labels;
  m.p = Eigen::MatrixXd::Zero(num_labels, num_labels);
  const double unit = 1.0 / samples.size();
  for (const LabelVector& y : samples) {
    const int s = y.cardinality();
    if (s == 0) {
      m.p_empty += unit;
      continue;
    }
    for (int l : y.labels()) m.p(l, s - 1) += unit;
  }
  return m;
}

FPrediction gfm(const MarginalMatrix& m) {
  const int num_labels = m.num_labels;
  if (num_labels < 1) throw std::invalid_argument("gfm: empty marginal matrix");
  // delta = P W with w_{sk} = 2/(s+k), 1-based s and k.
  Eigen::MatrixXd w(num_labels, num_labels);
  for (int k = 0; k < num_labels; ++k)
    for (int s = 0; s < num_labels; ++s) w(k, s) = 2.0 / ((s + 1) + (k + 1));
  const Eigen::MatrixXd delta = m.p * w;

  // s = 0: the empty prediction scores p(y=0|x).
  FPrediction best;
  best.labels = LabelVector({}, num_labels);
  best.expected_f1 = m.p_empty;
  best.cardinality = 0;

  std::vector<int> order(num_labels);
  for (int s = 1; s <= num_labels; ++s) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return delta(a, s - 1) > delta(b, s - 1);  // stable: ties keep smaller id first
    });
    double expected = 0.0;
    std::vector<int> chosen(order.begin(), order.begin() + s);
    for (int l : chosen) expected += delta(l, s - 1);
    if (expected > best.expected_f1) {
      std::sort(chosen.begin(), chosen.end());
      best.labels = LabelVector(std::move(chosen), num_labels);
      best.expected_f1 = expected;
      best.cardinality = s;
    }
  }
  return best;
}

namespace {

double f1_between_masks(std::uint64_t a, std::uint64_t b) {
  const int inter = std::popcount(a & b);
  const int total = std::popcount(a) + std::popcount(b);
  if (total == 0) return 1.0;
  return 2.0 * inter / total;
}

void check_mask_table(const std::vector<double>& probs_by_mask, int num_labels) {
  if (num_labels < 1 || num_labels > 20)
    throw std::invalid_argument("brute force: L out of enumeration range");
  if (probs_by_mask.size() != (size_t{1} << num_labels))
    throw std::invalid_argument("brute force: table size != 2^L");
}

}  // namespace

double brute_force_expected_f1(const std::vector<double>& probs_by_mask, int num_labels,
                               const LabelVector& candidate) {
  check_mask_table(probs_by_mask, num_labels);
  const std::uint64_t cand = candidate.mask();
  double expected = 0.0;
  for (std::uint64_t y = 0; y < probs_by_mask.size(); ++y)
    expected += probs_by_mask[y] * f1_between_masks(y, cand);
  return expected;
}

FPrediction brute_force_best(const std::vector<double>& probs_by_mask, int num_labels) {
  check_mask_table(probs_by_mask, num_labels);
  FPrediction best;
  best.expected_f1 = -1.0;
  for (std::uint64_t cand = 0; cand < probs_by_mask.size(); ++cand) {
    double expected = 0.0;
    for (std::uint64_t y = 0; y < probs_by_mask.size(); ++y)
      expected += probs_by_mask[y] * f1_between_masks(y, cand);
    if (expected > best.expected_f1) {
      best.labels = LabelVector::from_mask(cand, num_labels);
      best.expected_f1 = expected;
      best.cardinality = best.labels.cardinality();
    }
  }
  return best;
}

std::vector<double> posterior_to_mask_table(const SupportPosterior& posterior, int num_labels) {
  if (num_labels < 1 || num_labels > 20)
    throw std::invalid_argument("posterior_to_mask_table: L out of range");
  std::vector<double> table(size_t{1} << num_labels, 0.0);
  for (size_t j = 0; j < posterior.combinations.size(); ++j)
    table[posterior.combinations[j].mask()] += posterior.probabilities[j];
  return table;
}

LabelVector support_map(const SupportPosterior& posterior) {
  if (posterior.combinations.empty()) throw std::invalid_argument("support_map: empty posterior");
  int best = 0;
  for (size_t j = 1; j < posterior.combinations.size(); ++j) {
    if (posterior.probabilities[j] > posterior.probabilities[best] ||
        (posterior.probabilities[j] == posterior.probabilities[best] &&
         posterior.combinations[j].canonical_key() < posterior.combinations[best].canonical_key()))
      best = static_cast<int>(j);
  }
  return posterior.combinations[best];
}

LabelVector br_map(const BrModel& model, const SparseInstance& x) {
  std::vector<int> labels;
  for (int l = 0; l < model.num_labels(); ++l)
    if (model.marginal(l, x) > 0.5) labels.push_back(l);
  return LabelVector(std::move(labels), model.num_labels());
}

LabelVector map_predict(const JointEstimator& estimator, const SparseInstance& x,
                        const SupportSet* support, int beam_width) {
  if (const auto* br = dynamic_cast<const BrModel*>(&estimator)) return br_map(*br, x);
  if (const auto* pcc = dynamic_cast<const PccModel*>(&estimator))
    return pcc_map_beam(*pcc, x, beam_width);
  if (support == nullptr || support->size() == 0)
    throw std::invalid_argument("map_predict: support set required for this estimator");
  return support_map(support_posterior(estimator, x, *support));
}

LsfModel lsf_train(const MultiLabelDataset& dataset, const ElasticNetConfig& en,
                   const EarlyStopConfig& /*stop*/) {
  dataset.validate();
  LsfModel model;
  model.num_labels = dataset.num_labels;
  model.feature_dim = dataset.num_features;
  const int num_labels = dataset.num_labels;

  for (int l = 0; l < num_labels; ++l) {
    std::vector<WeightedExample> examples;
    examples.reserve(dataset.size());
    for (int i = 0; i < dataset.size(); ++i)
      examples.push_back({dataset.instances[i], dataset.labels[i].contains(l) ? 1 : 0, 1.0});
    model.marginal_models.push_back(train_elastic_net(examples, 2, en));
  }

  // Global cardinality prior, used when a label has no positive instances:
  // an intercept-only fit on all nonempty rows.
  std::vector<WeightedExample> prior_examples;
  for (int i = 0; i < dataset.size(); ++i) {
    const int s = dataset.labels[i].cardinality();
    if (s >= 1) prior_examples.push_back({dataset.instances[i], s - 1, 0.0});
  }

  for (int l = 0; l < num_labels; ++l) {
    std::vector<WeightedExample> examples;
    for (int i = 0; i < dataset.size(); ++i) {
      if (!dataset.labels[i].contains(l)) continue;
      examples.push_back({dataset.instances[i], dataset.labels[i].cardinality() - 1, 1.0});
    }
    if (examples.empty()) {
      if (prior_examples.empty())
        throw std::invalid_argument("lsf_train: no nonempty label vectors");
      examples = prior_examples;
      for (auto& ex : examples) {
        ex.weight = 1.0;
        // intercept-only: no features, only class priors are learnable
        ex.instance = SparseInstance({}, dataset.num_features);
      }
    }
    model.cardinality_models.push_back(train_elastic_net(examples, num_labels, en));
  }

  std::vector<WeightedExample> empty_examples;
  empty_examples.reserve(dataset.size());
  for (int i = 0; i < dataset.size(); ++i)
    empty_examples.push_back(
        {dataset.instances[i], dataset.labels[i].cardinality() == 0 ? 1 : 0, 1.0});
  model.empty_model = train_elastic_net(empty_examples, 2, en);
  return model;
}

MarginalMatrix lsf_marginals(const LsfModel& model, const SparseInstance& x) {
  MarginalMatrix m;
  m.num_labels = model.num_labels;
  m.p = Eigen::MatrixXd::Zero(model.num_labels, model.num_labels);
  for (int l = 0; l < model.num_labels; ++l) {
    const double marginal = predict_distribution(model.marginal_models[l], x)[1];
    const Eigen::VectorXd cardinality = predict_distribution(model.cardinality_models[l], x);
    for (int s = 1; s <= model.num_labels; ++s) m.p(l, s - 1) = marginal * cardinality[s - 1];
  }
  m.p_empty = predict_distribution(model.empty_model, x)[1];
  return m;
}

}  // namespace mlc
