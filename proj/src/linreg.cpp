#include "mlc/linreg.hpp"

#include <cmath>
#include <stdexcept>

namespace mlc {

Eigen::VectorXd LinearModel::scores(const SparseInstance& x) const {
  if (x.dimension() != dimension())
    throw std::invalid_argument("LinearModel: instance dimension mismatch");
  Eigen::VectorXd s = intercepts_;
  for (const auto& e : x.entries()) s += weights_.col(e.index) * e.value;
  return s;
}

int LinearModel::nonzero_count() const {
  return static_cast<int>((weights_.array() != 0.0).count());
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

namespace {

Eigen::VectorXd stable_softmax(Eigen::VectorXd s) {
  const double m = s.maxCoeff();
  s = (s.array() - m).exp();
  return s / s.sum();
}

double log_prob_of_class(const Eigen::VectorXd& s, int c) {
  const double m = s.maxCoeff();
  const double lse = m + std::log((s.array() - m).exp().sum());
  return s[c] - lse;
}

void check_examples(const std::vector<WeightedExample>& examples, int num_classes) {
  if (examples.empty()) throw std::invalid_argument("train: no examples");
  double total = 0.0;
  for (const auto& ex : examples) {
    if (ex.class_id < 0 || ex.class_id >= num_classes)
      throw std::invalid_argument("train: class id out of range");
    if (!(ex.weight >= 0.0) || !std::isfinite(ex.weight))
      throw std::invalid_argument("train: bad example weight");
    total += ex.weight;
  }
  if (total <= 0.0) throw std::invalid_argument("train: all-zero total weight");
}

}  // namespace

Eigen::VectorXd predict_distribution(const LinearModel& model, const SparseInstance& x) {
  return stable_softmax(model.scores(x));
}

double mean_nll(const LinearModel& model, const std::vector<WeightedExample>& examples) {
  double loss = 0.0, total = 0.0;
  for (const auto& ex : examples) {
    if (ex.weight == 0.0) continue;
    loss -= ex.weight * log_prob_of_class(model.scores(ex.instance), ex.class_id);
    total += ex.weight;
  }
  return loss / total;
}

void mean_nll_gradient(const LinearModel& model, const std::vector<WeightedExample>& examples,
                       Eigen::MatrixXd& grad_weights, Eigen::VectorXd& grad_intercepts) {
  grad_weights = Eigen::MatrixXd::Zero(model.num_classes(), model.dimension());
  grad_intercepts = Eigen::VectorXd::Zero(model.num_classes());
  double total = 0.0;
  for (const auto& ex : examples) total += ex.weight;
  for (const auto& ex : examples) {
    if (ex.weight == 0.0) continue;
    Eigen::VectorXd p = stable_softmax(model.scores(ex.instance));
    p[ex.class_id] -= 1.0;
    p *= ex.weight / total;
    grad_intercepts += p;
    for (const auto& e : ex.instance.entries()) grad_weights.col(e.index) += p * e.value;
  }
}

double penalized_objective(const LinearModel& model, const std::vector<WeightedExample>& examples,
                           const ElasticNetConfig& config) {
  double penalty = config.lambda * ((1.0 - config.alpha) * model.weights().squaredNorm() +
                                    config.alpha * model.weights().lpNorm<1>());
  return mean_nll(model, examples) + penalty;
}

ElasticNetTrainer::ElasticNetTrainer(std::vector<WeightedExample> examples, int num_classes,
                                     ElasticNetConfig config)
    : examples_(std::move(examples)), config_(std::move(config)) {
  if (num_classes < 1) throw std::invalid_argument("train: num_classes < 1");
  check_examples(examples_, num_classes);
  if (config_.lambda < 0 || config_.alpha < 0 || config_.alpha > 1)
    throw std::invalid_argument("train: bad elastic-net config");
  const int dim = examples_.front().instance.dimension();
  for (const auto& ex : examples_)
    if (ex.instance.dimension() != dim) throw std::invalid_argument("train: mixed dimensions");
  model_ = LinearModel(num_classes, dim);
  columns_.resize(dim);
  for (int i = 0; i < static_cast<int>(examples_.size()); ++i)
    for (const auto& e : examples_[i].instance.entries())
      columns_[e.index].emplace_back(i, e.value);
  set_example_weights({});  // compute weight-dependent caches from current weights
}

void ElasticNetTrainer::set_example_weights(const std::vector<double>& weights) {
  if (!weights.empty()) {
    if (weights.size() != examples_.size())
      throw std::invalid_argument("set_example_weights: size mismatch");
    for (size_t i = 0; i < weights.size(); ++i) examples_[i].weight = weights[i];
    check_examples(examples_, model_.num_classes());
  }
  total_weight_ = 0.0;
  for (const auto& ex : examples_) total_weight_ += ex.weight;
  column_sq_.assign(columns_.size(), 0.0);
  for (size_t d = 0; d < columns_.size(); ++d)
    for (const auto& [i, v] : columns_[d]) column_sq_[d] += examples_[i].weight * v * v;
  converged_ = false;
  refresh_scores();
}

void ElasticNetTrainer::refresh_scores() {
  const int n = static_cast<int>(examples_.size());
  scores_ = Eigen::MatrixXd::Zero(n, model_.num_classes());
  for (int i = 0; i < n; ++i) scores_.row(i) = model_.scores(examples_[i].instance).transpose();
}

void ElasticNetTrainer::run(int iterations) {
  const int n = static_cast<int>(examples_.size());
  const int num_classes = model_.num_classes();
  if (num_classes == 1) {  // degenerate gating for single-component mixtures
    converged_ = true;
    iterations_done_ += iterations;
    return;
  }
  // For binary models class 0 is the pinned reference class.
  const int first_class = num_classes == 2 ? 1 : 0;
  const double l1 = config_.lambda * config_.alpha;
  const double l2 = config_.lambda * (1.0 - config_.alpha);

  Eigen::VectorXd residual(n), prob(n);
  for (int pass = 0; pass < iterations; ++pass) {
    double max_delta = 0.0;
    for (int c = first_class; c < num_classes; ++c) {
      // Quadratic majorization at the current scores, curvature bound 1/4.
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd p = stable_softmax(scores_.row(i).transpose());
        const double y = examples_[i].class_id == c ? 1.0 : 0.0;
        residual[i] = 4.0 * (y - p[c]);
      }
      // Weighted least squares: sum_i c_i (r_i - x_i.delta)^2, c_i = v_i/(8W).
      const double scale = 1.0 / (8.0 * total_weight_);
      // intercept (unpenalized)
      {
        double num = 0.0;
        for (int i = 0; i < n; ++i) num += examples_[i].weight * residual[i];
        const double delta = num / total_weight_;  // scale cancels
        model_.intercepts()[c] += delta;
        residual.array() -= delta;
        max_delta = std::max(max_delta, std::abs(delta));
      }
      for (size_t d = 0; d < columns_.size(); ++d) {
        if (columns_[d].empty()) continue;
        const double a = column_sq_[d] * scale;
        if (a + l2 <= 0.0) continue;
        double g = 0.0;
        for (const auto& [i, v] : columns_[d]) g += examples_[i].weight * v * residual[i];
        g *= scale;
        const double w_old = model_.weights()(c, d);
        const double w_new = soft_threshold(g + a * w_old, 0.5 * l1) / (a + l2);
        const double delta = w_new - w_old;
        if (delta != 0.0) {
          model_.weights()(c, d) = w_new;
          for (const auto& [i, v] : columns_[d]) residual[i] -= v * delta;
          max_delta = std::max(max_delta, std::abs(delta));
        }
      }
      // scores for class c: fitted value = z - r, and z was s + r_initial;
      // cheaper to recompute from the model directly.
      for (int i = 0; i < n; ++i)
        scores_(i, c) = model_.intercepts()[c] + examples_[i].instance.dot(model_.weights().row(c).transpose());
    }
    ++iterations_done_;
    if (max_delta < config_.convergence_tolerance) {
      converged_ = true;
      break;
    }
    if (!std::isfinite(max_delta)) throw std::runtime_error("train: non-finite update");
  }
}

double ElasticNetTrainer::objective() const {
  return penalized_objective(model_, examples_, config_);
}

LinearModel train_elastic_net(const std::vector<WeightedExample>& examples, int num_classes,
                              const ElasticNetConfig& config) {
  ElasticNetTrainer trainer(examples, num_classes, config);
  trainer.run(config.max_iterations);
  if (!std::isfinite(trainer.objective())) throw std::runtime_error("train: non-finite objective");
  return trainer.model();
}

}  // namespace mlc
