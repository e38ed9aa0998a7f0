#include "mlc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mlc {

namespace {

// log p(y=1) for a binary model with class 0 pinned at zero.
double log_sigmoid(double score) { return -std::log1p(std::exp(-score)); }

double binary_score(const LinearModel& model, const SparseInstance& x) {
  Eigen::VectorXd s = model.scores(x);
  return s[1] - s[0];
}

double binary_label_log_prob(const LinearModel& model, const SparseInstance& x, bool present) {
  const double s = binary_score(model, x);
  return present ? log_sigmoid(s) : log_sigmoid(-s);
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

SparseInstance augment_with_bits(const SparseInstance& x, const std::vector<char>& bits,
                                 int position) {
  std::vector<SparseInstance::Entry> entries = x.entries();
  for (int t = 0; t < position; ++t)
    if (bits[t]) entries.push_back({x.dimension() + t, 1.0});
  return SparseInstance(std::move(entries), x.dimension() + position);
}

}  // namespace

// ---- BR ---------------------------------------------------------------------

BrModel::BrModel(std::vector<LinearModel> label_models) : models_(std::move(label_models)) {
  if (models_.empty()) throw std::invalid_argument("BrModel: no label models");
  for (const auto& m : models_)
    if (m.dimension() != models_[0].dimension() || m.num_classes() != 2)
      throw std::invalid_argument("BrModel: inconsistent label models");
}

double BrModel::marginal(int label, const SparseInstance& x) const {
  return 1.0 / (1.0 + std::exp(-binary_score(models_[label], x)));
}

double BrModel::log_joint(const SparseInstance& x, const LabelVector& y) const {
  if (y.label_space_size() != num_labels())
    throw std::invalid_argument("BrModel: label space mismatch");
  double lp = 0.0;
  for (int l = 0; l < num_labels(); ++l)
    lp += binary_label_log_prob(models_[l], x, y.contains(l));
  return lp;
}

LabelVector BrModel::sample(const SparseInstance& x, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> labels;
  for (int l = 0; l < num_labels(); ++l)
    if (unit(rng) < marginal(l, x)) labels.push_back(l);
  return LabelVector(std::move(labels), num_labels());
}

BrModel br_train(const MultiLabelDataset& dataset, const ElasticNetConfig& en,
                 const EarlyStopConfig& stop,
                 const std::function<double(const BrModel&)>& validation_score) {
  dataset.validate();
  const int num_labels = dataset.num_labels;
  std::vector<ElasticNetTrainer> trainers;
  trainers.reserve(num_labels);
  for (int l = 0; l < num_labels; ++l) {
    std::vector<WeightedExample> examples;
    examples.reserve(dataset.size());
    for (int i = 0; i < dataset.size(); ++i)
      examples.push_back({dataset.instances[i], dataset.labels[i].contains(l) ? 1 : 0, 1.0});
    trainers.emplace_back(std::move(examples), 2, en);
  }

  struct BrTrainer {
    std::vector<ElasticNetTrainer>* trainers;
    BrModel current;
    int iterations = 0;
    void rebuild() {
      std::vector<LinearModel> models;
      for (auto& t : *trainers) models.push_back(t.model());
      current = BrModel(std::move(models));
    }
    void run(int k) {
      for (auto& t : *trainers) t.run(k);
      iterations += k;
      rebuild();
    }
    bool converged() const {
      return std::all_of(trainers->begin(), trainers->end(),
                         [](const ElasticNetTrainer& t) { return t.converged(); });
    }
    int iterations_done() const { return iterations; }
    const BrModel& model() const { return current; }
  } runner{&trainers};
  runner.rebuild();

  if (validation_score) {
    return train_with_early_stopping(runner, validation_score, stop, en.max_iterations).first;
  }
  runner.run(en.max_iterations);
  return runner.model();
}

// ---- PCC --------------------------------------------------------------------

PccModel::PccModel(std::vector<int> order, std::vector<LinearModel> chain_models)
    : order_(std::move(order)), models_(std::move(chain_models)) {
  const int num_labels = static_cast<int>(order_.size());
  if (models_.size() != order_.size()) throw std::invalid_argument("PccModel: size mismatch");
  std::vector<char> seen(num_labels, 0);
  for (int l : order_) {
    if (l < 0 || l >= num_labels || seen[l]) throw std::invalid_argument("PccModel: bad order");
    seen[l] = 1;
  }
  const int dim = models_.empty() ? 0 : models_[0].dimension();
  for (int j = 0; j < num_labels; ++j)
    if (models_[j].dimension() != dim + j)
      throw std::invalid_argument("PccModel: chain model dimension mismatch");
}

int PccModel::feature_dim() const { return models_.empty() ? 0 : models_[0].dimension(); }

double PccModel::conditional(int position, const SparseInstance& x,
                             const std::vector<char>& previous_bits) const {
  const SparseInstance aug = augment_with_bits(x, previous_bits, position);
  return 1.0 / (1.0 + std::exp(-binary_score(models_[position], aug)));
}

double PccModel::log_joint(const SparseInstance& x, const LabelVector& y) const {
  if (y.label_space_size() != num_labels())
    throw std::invalid_argument("PccModel: label space mismatch");
  double lp = 0.0;
  std::vector<char> bits(num_labels(), 0);
  for (int j = 0; j < num_labels(); ++j) {
    const bool present = y.contains(order_[j]);
    const SparseInstance aug = augment_with_bits(x, bits, j);
    lp += binary_label_log_prob(models_[j], aug, present);
    bits[j] = present ? 1 : 0;
  }
  return lp;
}

LabelVector PccModel::sample(const SparseInstance& x, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<char> bits(num_labels(), 0);
  std::vector<int> labels;
  for (int j = 0; j < num_labels(); ++j) {
    if (unit(rng) < conditional(j, x, bits)) {
      bits[j] = 1;
      labels.push_back(order_[j]);
    }
  }
  std::sort(labels.begin(), labels.end());
  return LabelVector(std::move(labels), num_labels());
}

PccModel pcc_train(const MultiLabelDataset& dataset, const std::vector<int>& order,
                   const ElasticNetConfig& en, const EarlyStopConfig& stop,
                   const std::function<double(const PccModel&)>& validation_score) {
  dataset.validate();
  const int num_labels = dataset.num_labels;
  if (static_cast<int>(order.size()) != num_labels)
    throw std::invalid_argument("pcc_train: order size mismatch");

  std::vector<ElasticNetTrainer> trainers;
  trainers.reserve(num_labels);
  for (int j = 0; j < num_labels; ++j) {
    std::vector<WeightedExample> examples;
    examples.reserve(dataset.size());
    for (int i = 0; i < dataset.size(); ++i) {
      std::vector<char> bits(num_labels, 0);
      for (int t = 0; t < j; ++t) bits[t] = dataset.labels[i].contains(order[t]) ? 1 : 0;
      SparseInstance aug = augment_with_bits(dataset.instances[i], bits, j);
      examples.push_back({std::move(aug), dataset.labels[i].contains(order[j]) ? 1 : 0, 1.0});
    }
    trainers.emplace_back(std::move(examples), 2, en);
  }

  struct PccTrainer {
    std::vector<ElasticNetTrainer>* trainers;
    const std::vector<int>* order;
    PccModel current;
    int iterations = 0;
    void rebuild() {
      std::vector<LinearModel> models;
      for (auto& t : *trainers) models.push_back(t.model());
      current = PccModel(*order, std::move(models));
    }
    void run(int k) {
      for (auto& t : *trainers) t.run(k);
      iterations += k;
      rebuild();
    }
    bool converged() const {
      return std::all_of(trainers->begin(), trainers->end(),
                         [](const ElasticNetTrainer& t) { return t.converged(); });
    }
    int iterations_done() const { return iterations; }
    const PccModel& model() const { return current; }
  } runner{&trainers, &order};
  runner.rebuild();

  if (validation_score) {
    return train_with_early_stopping(runner, validation_score, stop, en.max_iterations).first;
  }
  runner.run(en.max_iterations);
  return runner.model();
}

LabelVector pcc_map_beam(const PccModel& model, const SparseInstance& x, int beam_width) {
  if (beam_width < 1) throw std::invalid_argument("pcc_map_beam: beam_width < 1");
  struct Partial {
    double log_prob;
    std::vector<char> bits;
  };
  std::vector<Partial> beam{{0.0, {}}};
  for (int j = 0; j < model.num_labels(); ++j) {
    std::vector<Partial> expanded;
    expanded.reserve(beam.size() * 2);
    for (const Partial& p : beam) {
      std::vector<char> bits = p.bits;
      bits.resize(model.num_labels(), 0);
      const double prob_one = model.conditional(j, x, bits);
      for (int bit = 0; bit <= 1; ++bit) {
        Partial next = p;
        next.bits.push_back(static_cast<char>(bit));
        const double q = bit ? prob_one : 1.0 - prob_one;
        next.log_prob += q > 0.0 ? std::log(q) : -std::numeric_limits<double>::infinity();
        expanded.push_back(std::move(next));
      }
    }
    const size_t keep = std::min<size_t>(beam_width, expanded.size());
    std::partial_sort(expanded.begin(), expanded.begin() + keep, expanded.end(),
                      [](const Partial& a, const Partial& b) { return a.log_prob > b.log_prob; });
    expanded.resize(keep);
    beam = std::move(expanded);
  }
  const Partial& best = *std::max_element(
      beam.begin(), beam.end(),
      [](const Partial& a, const Partial& b) { return a.log_prob < b.log_prob; });
  std::vector<int> labels;
  for (int j = 0; j < model.num_labels(); ++j)
    if (best.bits[j]) labels.push_back(model.order()[j]);
  std::sort(labels.begin(), labels.end());
  return LabelVector(std::move(labels), model.num_labels());
}

// ---- CBM --------------------------------------------------------------------

CbmModel::CbmModel(LinearModel gating, std::vector<std::vector<LinearModel>> components)
    : gating_(std::move(gating)), components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("CbmModel: no components");
  if (gating_.num_classes() != static_cast<int>(components_.size()))
    throw std::invalid_argument("CbmModel: gating class count != K");
  for (const auto& comp : components_)
    if (comp.size() != components_[0].size())
      throw std::invalid_argument("CbmModel: component label count mismatch");
}

Eigen::VectorXd CbmModel::mixing_weights(const SparseInstance& x) const {
  return predict_distribution(gating_, x);
}

double CbmModel::log_joint(const SparseInstance& x, const LabelVector& y) const {
  if (y.label_space_size() != num_labels())
    throw std::invalid_argument("CbmModel: label space mismatch");
  const Eigen::VectorXd pi = mixing_weights(x);
  Eigen::VectorXd terms(num_components());
  for (int k = 0; k < num_components(); ++k) {
    double lp = pi[k] > 0.0 ? std::log(pi[k]) : -std::numeric_limits<double>::infinity();
    for (int l = 0; l < num_labels(); ++l)
      lp += binary_label_log_prob(components_[k][l], x, y.contains(l));
    terms[k] = lp;
  }
  return log_sum_exp(terms);
}

LabelVector CbmModel::sample(const SparseInstance& x, std::mt19937_64& rng) const {
  const Eigen::VectorXd pi = mixing_weights(x);
  std::discrete_distribution<int> pick(pi.data(), pi.data() + pi.size());
  const int k = pick(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> labels;
  for (int l = 0; l < num_labels(); ++l) {
    const double p = 1.0 / (1.0 + std::exp(-binary_score(components_[k][l], x)));
    if (unit(rng) < p) labels.push_back(l);
  }
  return LabelVector(std::move(labels), num_labels());
}

CbmTrainResult cbm_train_em(const MultiLabelDataset& dataset, int num_components,
                            const ElasticNetConfig& en, const EarlyStopConfig& stop,
                            std::uint64_t seed, const CbmOptions& options,
                            const std::function<double(const CbmModel&)>& validation_score) {
  dataset.validate();
  if (num_components < 1) throw std::invalid_argument("cbm_train_em: K < 1");
  const int n = dataset.size();
  const int num_labels = dataset.num_labels;
  const int k_comp = num_components;

  ElasticNetConfig inner = en;
  inner.max_iterations = options.inner_iterations;

  // Gating sees every instance once per component, weighted by responsibility.
  std::vector<WeightedExample> gating_examples;
  gating_examples.reserve(static_cast<size_t>(n) * k_comp);
  for (int k = 0; k < k_comp; ++k)
    for (int i = 0; i < n; ++i) gating_examples.push_back({dataset.instances[i], k, 1.0});
  ElasticNetTrainer gating_trainer(std::move(gating_examples), k_comp, inner);

  std::vector<std::vector<ElasticNetTrainer>> component_trainers;
  component_trainers.reserve(k_comp);
  for (int k = 0; k < k_comp; ++k) {
    std::vector<ElasticNetTrainer> per_label;
    per_label.reserve(num_labels);
    for (int l = 0; l < num_labels; ++l) {
      std::vector<WeightedExample> examples;
      examples.reserve(n);
      for (int i = 0; i < n; ++i)
        examples.push_back({dataset.instances[i], dataset.labels[i].contains(l) ? 1 : 0, 1.0});
      per_label.emplace_back(std::move(examples), 2, inner);
    }
    component_trainers.push_back(std::move(per_label));
  }

  // Responsibilities, initialized to uniform plus seeded noise.
  Eigen::MatrixXd resp(n, k_comp);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, options.init_noise);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < k_comp; ++k) resp(i, k) = 1.0 / k_comp + noise(rng);
    resp.row(i) /= resp.row(i).sum();
  }

  CbmTrainResult result;
  auto current_model = [&]() {
    std::vector<std::vector<LinearModel>> comps;
    comps.reserve(k_comp);
    for (int k = 0; k < k_comp; ++k) {
      std::vector<LinearModel> per_label;
      for (int l = 0; l < num_labels; ++l) per_label.push_back(component_trainers[k][l].model());
      comps.push_back(std::move(per_label));
    }
    return CbmModel(gating_trainer.model(), std::move(comps));
  };

  auto m_step = [&]() {
    std::vector<double> gating_weights(static_cast<size_t>(n) * k_comp);
    for (int k = 0; k < k_comp; ++k)
      for (int i = 0; i < n; ++i) gating_weights[static_cast<size_t>(k) * n + i] = resp(i, k);
    gating_trainer.set_example_weights(gating_weights);
    gating_trainer.run(options.inner_iterations);
    for (int k = 0; k < k_comp; ++k) {
      std::vector<double> w(n);
      for (int i = 0; i < n; ++i) w[i] = resp(i, k);
      for (int l = 0; l < num_labels; ++l) {
        component_trainers[k][l].set_example_weights(w);
        component_trainers[k][l].run(options.inner_iterations);
      }
    }
  };

  // E-step: responsibilities gamma_ik from the current model; returns the
  // observed-data log-likelihood sum_i log p(y_i|x_i).
  auto e_step = [&](const CbmModel& model) {
    double loglik = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd pi = model.mixing_weights(dataset.instances[i]);
      Eigen::VectorXd terms(k_comp);
      for (int k = 0; k < k_comp; ++k) {
        double lp = pi[k] > 0.0 ? std::log(pi[k]) : -std::numeric_limits<double>::infinity();
        for (int l = 0; l < num_labels; ++l)
          lp += binary_label_log_prob(model.components()[k][l], dataset.instances[i],
                                      dataset.labels[i].contains(l));
        terms[k] = lp;
      }
      const double lse = log_sum_exp(terms);
      loglik += lse;
      if (!std::isfinite(lse)) {
        resp.row(i).setConstant(1.0 / k_comp);
        ++result.degenerate_responsibility_count;
      } else {
        resp.row(i) = (terms.array() - lse).exp();
      }
    }
    return loglik;
  };

  CbmModel best;
  double best_score = -std::numeric_limits<double>::infinity();
  int bad_checks = 0;
  bool have_best = false;
  for (int iter = 0; iter < options.em_iterations; ++iter) {
    m_step();
    CbmModel model = current_model();
    result.loglik_trace.push_back(e_step(model));
    if (validation_score && (iter + 1) % stop.evaluation_interval == 0) {
      const double s = validation_score(model);
      if (!have_best || s > best_score) {
        best_score = s;
        best = model;
        result.best_iteration = iter + 1;
        bad_checks = 0;
        have_best = true;
      } else if (iter + 1 >= stop.min_iterations && ++bad_checks >= stop.patience) {
        result.model = std::move(best);
        return result;
      }
    }
  }
  result.model = have_best ? std::move(best) : current_model();
  if (!have_best) result.best_iteration = options.em_iterations;
  return result;
}

// ---- CRF --------------------------------------------------------------------

CrfModel::CrfModel(int num_labels, int feature_dim, bool include_pairwise, SupportSet support)
    : num_labels_(num_labels),
      feature_dim_(feature_dim),
      include_pairwise_(include_pairwise),
      unary_(Eigen::MatrixXd::Zero(num_labels, feature_dim + 1)),
      pairwise_(Eigen::MatrixXd::Zero(num_labels * (num_labels - 1) / 2, 4)),
      support_(std::move(support)) {
  if (num_labels_ < 1 || feature_dim_ < 1) throw std::invalid_argument("CrfModel: bad shape");
  if (support_.size() == 0) throw std::invalid_argument("CrfModel: empty support");
}

int CrfModel::pair_index(int l, int m) const {
  return l * num_labels_ - l * (l + 1) / 2 + (m - l - 1);
}

Eigen::VectorXd CrfModel::unary_activations(const SparseInstance& x) const {
  if (x.dimension() != feature_dim_) throw std::invalid_argument("CrfModel: dimension mismatch");
  Eigen::VectorXd u = unary_.col(feature_dim_);  // bias
  for (const auto& e : x.entries()) u += unary_.col(e.index) * e.value;
  return u;
}

double CrfModel::log_joint(const SparseInstance& x, const LabelVector& y) const {
  if (y.label_space_size() != num_labels_)
    throw std::invalid_argument("CrfModel: label space mismatch");
  const Eigen::VectorXd u = unary_activations(x);
  double score = 0.0;
  for (int l : y.labels()) score += u[l];
  if (include_pairwise_) {
    const std::uint64_t mask = y.mask();
    for (int l = 0; l < num_labels_; ++l)
      for (int m = l + 1; m < num_labels_; ++m) {
        const int t = 2 * static_cast<int>(mask >> l & 1) + static_cast<int>(mask >> m & 1);
        score += pairwise_(pair_index(l, m), t);
      }
  }
  return score;
}

LabelVector CrfModel::sample(const SparseInstance&, std::mt19937_64&) const {
  throw std::logic_error("CrfModel: sampling is not supported");
}

Eigen::VectorXd CrfModel::support_scores(const SparseInstance& x) const {
  Eigen::VectorXd scores(support_.size());
  for (int j = 0; j < support_.size(); ++j)
    scores[j] = log_joint(x, support_.combinations()[j]);
  return scores;
}

Eigen::VectorXd crf_support_distribution(const CrfModel& model, const SparseInstance& x) {
  Eigen::VectorXd s = model.support_scores(x);
  const double lse = log_sum_exp(s);
  return (s.array() - lse).exp();
}

double crf_objective(const CrfModel& model, const MultiLabelDataset& dataset, double l2_lambda) {
  double obj = 0.0;
  for (int i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd scores = model.support_scores(dataset.instances[i]);
    obj += model.log_joint(dataset.instances[i], dataset.labels[i]) - log_sum_exp(scores);
  }
  // bias column excluded from the penalty
  obj -= l2_lambda * (model.unary().leftCols(model.feature_dim()).squaredNorm() +
                      model.pairwise().squaredNorm());
  return obj;
}

void crf_gradient(const CrfModel& model, const MultiLabelDataset& dataset, double l2_lambda,
                  Eigen::MatrixXd& grad_unary, Eigen::MatrixXd& grad_pairwise) {
  const int num_labels = model.num_labels();
  const int dim = model.feature_dim();
  grad_unary = Eigen::MatrixXd::Zero(num_labels, dim + 1);
  grad_pairwise = Eigen::MatrixXd::Zero(model.num_pairs(), 4);
  const SupportSet& support = model.support();

  std::vector<std::uint64_t> masks(support.size());
  for (int j = 0; j < support.size(); ++j) masks[j] = support.combinations()[j].mask();

  for (int i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd q = crf_support_distribution(model, dataset.instances[i]);
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(num_labels);
    for (int l : dataset.labels[i].labels()) coef[l] += 1.0;
    for (int j = 0; j < support.size(); ++j)
      for (int l : support.combinations()[j].labels()) coef[l] -= q[j];
    for (const auto& e : dataset.instances[i].entries()) grad_unary.col(e.index) += coef * e.value;
    grad_unary.col(dim) += coef;

    if (model.include_pairwise()) {
      const std::uint64_t ymask = dataset.labels[i].mask();
      for (int l = 0; l < num_labels; ++l)
        for (int m = l + 1; m < num_labels; ++m) {
          const int p = model.pair_index(l, m);
          grad_pairwise(p, 2 * static_cast<int>(ymask >> l & 1) +
                               static_cast<int>(ymask >> m & 1)) += 1.0;
          for (int j = 0; j < support.size(); ++j)
            grad_pairwise(p, 2 * static_cast<int>(masks[j] >> l & 1) +
                                 static_cast<int>(masks[j] >> m & 1)) -= q[j];
        }
    }
  }
  grad_unary.leftCols(dim) -= 2.0 * l2_lambda * model.unary().leftCols(dim);
  if (model.include_pairwise()) grad_pairwise -= 2.0 * l2_lambda * model.pairwise();
}

CrfModel crf_train(const MultiLabelDataset& dataset, const SupportSet& support,
                   bool include_pairwise, double l2_lambda, const EarlyStopConfig& stop,
                   int max_iterations,
                   const std::function<double(const CrfModel&)>& validation_score) {
  dataset.validate();
  CrfModel model(dataset.num_labels, dataset.num_features, include_pairwise, support);

  double objective = crf_objective(model, dataset, l2_lambda);
  double step = 1.0 / dataset.size();
  Eigen::MatrixXd grad_unary, grad_pairwise;

  CrfModel best = model;
  double best_score = -std::numeric_limits<double>::infinity();
  int bad_checks = 0;
  bool have_best = false;

  for (int iter = 0; iter < max_iterations; ++iter) {
    crf_gradient(model, dataset, l2_lambda, grad_unary, grad_pairwise);
    const double grad_norm =
        grad_unary.squaredNorm() + (include_pairwise ? grad_pairwise.squaredNorm() : 0.0);
    if (grad_norm < 1e-18) break;

    step *= 2.0;  // optimistic restart from the last accepted step
    bool accepted = false;
    for (int halvings = 0; halvings <= 30; ++halvings) {
      CrfModel trial = model;
      trial.unary() += step * grad_unary;
      if (include_pairwise) trial.pairwise() += step * grad_pairwise;
      const double trial_obj = crf_objective(trial, dataset, l2_lambda);
      if (std::isfinite(trial_obj) && trial_obj > objective) {
        model = std::move(trial);
        objective = trial_obj;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(objective)) throw std::runtime_error("crf_train: non-finite objective");
      break;  // no ascent direction at line-search resolution
    }

    if (validation_score && (iter + 1) % stop.evaluation_interval == 0) {
      const double s = validation_score(model);
      if (!have_best || s > best_score) {
        best_score = s;
        best = model;
        bad_checks = 0;
        have_best = true;
      } else if (iter + 1 >= stop.min_iterations && ++bad_checks >= stop.patience) {
        return best;
      }
    }
  }
  if (validation_score) {
    const double final_score = validation_score(model);
    if (have_best && best_score > final_score) return best;
  }
  return model;
}

}  // namespace mlc
