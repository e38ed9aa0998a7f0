#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mlc/core.hpp"

namespace mlc {

/// Elastic-net penalty lambda * (alpha*||w||_1 + (1-alpha)*||w||_2^2)
/// applied per class; intercepts are never penalized.
struct ElasticNetConfig {
  double lambda = 1e-4;
  double alpha = 0.0;
  int max_iterations = 500;
  double convergence_tolerance = 1e-7;
};

struct EarlyStopConfig {
  int evaluation_interval = 10;
  int patience = 3;
  int min_iterations = 0;
};

struct WeightedExample {
  SparseInstance instance;
  int class_id = 0;
  double weight = 1.0;
};

/// Softmax-linear model over C classes. For binary models (C=2) class 0 is
/// the reference class and its weight row stays identically zero.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(int num_classes, int dimension)
      : weights_(Eigen::MatrixXd::Zero(num_classes, dimension)),
        intercepts_(Eigen::VectorXd::Zero(num_classes)) {}

  int num_classes() const { return static_cast<int>(weights_.rows()); }
  int dimension() const { return static_cast<int>(weights_.cols()); }

  Eigen::MatrixXd& weights() { return weights_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  Eigen::VectorXd& intercepts() { return intercepts_; }
  const Eigen::VectorXd& intercepts() const { return intercepts_; }

  /// Per-class linear scores w_{0c} + x.w_c.
  Eigen::VectorXd scores(const SparseInstance& x) const;

  /// Number of exactly-nonzero feature weights (intercepts excluded).
  int nonzero_count() const;

 private:
  Eigen::MatrixXd weights_;    // C x D
  Eigen::VectorXd intercepts_; // C
};

double soft_threshold(double z, double gamma);

/// Numerically stable softmax of the model scores; sums to 1.
Eigen::VectorXd predict_distribution(const LinearModel& model, const SparseInstance& x);

/// Weighted mean negative log-likelihood (1/W) sum_i v_i * -log p_{g_i}(x_i).
double mean_nll(const LinearModel& model, const std::vector<WeightedExample>& examples);

/// Analytic gradient of mean_nll w.r.t. weights and intercepts.
void mean_nll_gradient(const LinearModel& model, const std::vector<WeightedExample>& examples,
                       Eigen::MatrixXd& grad_weights, Eigen::VectorXd& grad_intercepts);

/// mean_nll plus the elastic-net penalty on the model's free weights.
double penalized_objective(const LinearModel& model, const std::vector<WeightedExample>& examples,
                           const ElasticNetConfig& config);

/// Cyclic coordinate descent on the quadratic majorization of the softmax
/// loss, soft-thresholded univariate updates. Resumable: run() may be called
/// repeatedly; the model is a valid snapshot between calls.
class ElasticNetTrainer {
 public:
  ElasticNetTrainer(std::vector<WeightedExample> examples, int num_classes,
                    ElasticNetConfig config);

  /// Runs up to `iterations` outer passes (all classes, all coordinates).
  /// Stops early once the max absolute weight change in a pass drops below
  /// convergence_tolerance.
  void run(int iterations);

  bool converged() const { return converged_; }
  int iterations_done() const { return iterations_done_; }

  const LinearModel& model() const { return model_; }
  LinearModel& mutable_model() { return model_; }

  /// Replaces example weights in place (EM M-steps). Keeps current model as
  /// the warm start; resets the convergence flag.
  void set_example_weights(const std::vector<double>& weights);

  double objective() const;
  const std::vector<WeightedExample>& examples() const { return examples_; }

 private:
  void refresh_scores();

  std::vector<WeightedExample> examples_;
  ElasticNetConfig config_;
  LinearModel model_;
  Eigen::MatrixXd scores_;  // N x C, kept in sync with the model
  double total_weight_ = 0.0;
  // column view of the data: per feature, (example id, value) pairs
  std::vector<std::vector<std::pair<int, double>>> columns_;
  std::vector<double> column_sq_;  // per feature, sum_i v_i x_id^2 (cache key: weights)
  bool converged_ = false;
  int iterations_done_ = 0;
};

LinearModel train_elastic_net(const std::vector<WeightedExample>& examples, int num_classes,
                              const ElasticNetConfig& config);

/// Runs a resumable trainer in chunks of `evaluation_interval`, scoring each
/// checkpoint, and returns the best snapshot plus its iteration index.
/// Trainer must expose run(int), converged(), iterations_done(), model().
template <class Trainer, class ScoreFn>
auto train_with_early_stopping(Trainer& trainer, ScoreFn&& score, const EarlyStopConfig& stop,
                               int max_iterations)
    -> std::pair<std::decay_t<decltype(trainer.model())>, int> {
  using Model = std::decay_t<decltype(trainer.model())>;
  Model best = trainer.model();
  double best_score = score(best);
  int best_iteration = trainer.iterations_done();
  int bad_checks = 0;
  while (trainer.iterations_done() < max_iterations && !trainer.converged()) {
    int chunk = std::min(stop.evaluation_interval, max_iterations - trainer.iterations_done());
    trainer.run(chunk);
    double s = score(trainer.model());
    if (s > best_score) {
      best_score = s;
      best = trainer.model();
      best_iteration = trainer.iterations_done();
      bad_checks = 0;
    } else if (trainer.iterations_done() >= stop.min_iterations) {
      if (++bad_checks >= stop.patience) break;
    }
  }
  return {std::move(best), best_iteration};
}

}  // namespace mlc
