#include "mlc/experiment.hpp"

#include <numeric>
#include <random>
#include <stdexcept>

namespace mlc {

std::string classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::br: return "br";
    case ClassifierKind::pcc: return "pcc";
    case ClassifierKind::cbm: return "cbm";
    case ClassifierKind::crf: return "crf";
    case ClassifierKind::lsf: return "lsf";
  }
  throw std::logic_error("bad classifier kind");
}

ClassifierKind classifier_from_name(const std::string& name) {
  if (name == "br") return ClassifierKind::br;
  if (name == "pcc") return ClassifierKind::pcc;
  if (name == "cbm") return ClassifierKind::cbm;
  if (name == "crf") return ClassifierKind::crf;
  if (name == "lsf") return ClassifierKind::lsf;
  throw std::invalid_argument("unknown classifier: " + name);
}

std::string strategy_name(PredictionStrategy s) {
  switch (s) {
    case PredictionStrategy::map: return "map";
    case PredictionStrategy::support_map: return "support-map";
    case PredictionStrategy::support_gfm: return "support-gfm";
    case PredictionStrategy::sample_gfm: return "sample-gfm";
    case PredictionStrategy::gfm_direct: return "gfm";
  }
  throw std::logic_error("bad strategy");
}

PredictionStrategy strategy_from_name(const std::string& name) {
  if (name == "map") return PredictionStrategy::map;
  if (name == "support-map") return PredictionStrategy::support_map;
  if (name == "support-gfm") return PredictionStrategy::support_gfm;
  if (name == "sample-gfm") return PredictionStrategy::sample_gfm;
  if (name == "gfm") return PredictionStrategy::gfm_direct;
  throw std::invalid_argument("unknown prediction strategy: " + name);
}

namespace {

const JointEstimator* as_estimator(const AnyModel& model) {
  if (const auto* m = std::get_if<BrModel>(&model)) return m;
  if (const auto* m = std::get_if<PccModel>(&model)) return m;
  if (const auto* m = std::get_if<CbmModel>(&model)) return m;
  if (const auto* m = std::get_if<CrfModel>(&model)) return m;
  return nullptr;
}

LabelVector predict_one(const AnyModel& model, const SparseInstance& x, const SupportSet* support,
                        const PredictSettings& settings, std::mt19937_64& rng) {
  if (const auto* lsf = std::get_if<LsfModel>(&model)) {
    if (settings.strategy != PredictionStrategy::gfm_direct)
      throw std::invalid_argument("lsf supports only the gfm strategy");
    return gfm(lsf_marginals(*lsf, x)).labels;
  }
  const JointEstimator& est = *as_estimator(model);
  switch (settings.strategy) {
    case PredictionStrategy::map:
      return map_predict(est, x, support, settings.beam_width);
    case PredictionStrategy::support_map: {
      if (support == nullptr) throw std::invalid_argument("support-map: support set required");
      return support_map(support_posterior(est, x, *support));
    }
    case PredictionStrategy::support_gfm: {
      if (support == nullptr) throw std::invalid_argument("support-gfm: support set required");
      const SupportPosterior post = support_posterior(est, x, *support);
      return gfm(marginals_from_posterior(post, est.num_labels())).labels;
    }
    case PredictionStrategy::sample_gfm: {
      if (!est.supports_sampling())
        throw std::invalid_argument("sample-gfm: estimator does not support sampling");
      std::vector<LabelVector> samples;
      samples.reserve(settings.sample_count);
      for (int s = 0; s < settings.sample_count; ++s) samples.push_back(est.sample(x, rng));
      return gfm(marginals_from_samples(samples, est.num_labels())).labels;
    }
    case PredictionStrategy::gfm_direct:
      throw std::invalid_argument("gfm strategy applies only to lsf models");
  }
  throw std::logic_error("bad strategy");
}

}  // namespace

AnyModel train_classifier(const MultiLabelDataset& train, const TrainSettings& settings) {
  MultiLabelDataset fit_data = train;
  std::optional<MultiLabelDataset> validation;
  if (settings.early_stop) {
    auto [t, v] = split_train_validation(train, settings.validation_fraction, settings.seed);
    fit_data = std::move(t);
    validation = std::move(v);
  }
  const SupportSet support = build_support(fit_data);
  const PredictSettings val_settings{settings.validation_strategy, settings.beam_width,
                                     settings.sample_count, settings.seed};

  auto validation_f1 = [&](const auto& model) {
    AnyModel any = model;
    return mean_f1(any, *validation, &support, val_settings);
  };

  switch (settings.classifier) {
    case ClassifierKind::br: {
      std::function<double(const BrModel&)> score;
      if (validation) score = validation_f1;
      return br_train(fit_data, settings.en, settings.stop, score);
    }
    case ClassifierKind::pcc: {
      std::vector<int> order = settings.pcc_order;
      if (order.empty()) {
        order.resize(fit_data.num_labels);
        std::iota(order.begin(), order.end(), 0);
      }
      std::function<double(const PccModel&)> score;
      if (validation) score = validation_f1;
      return pcc_train(fit_data, order, settings.en, settings.stop, score);
    }
    case ClassifierKind::cbm: {
      std::function<double(const CbmModel&)> score;
      if (validation) score = validation_f1;
      CbmOptions options;
      options.em_iterations = std::max(1, settings.en.max_iterations / options.inner_iterations);
      return cbm_train_em(fit_data, settings.cbm_components, settings.en, settings.stop,
                          settings.seed, options, score)
          .model;
    }
    case ClassifierKind::crf: {
      std::function<double(const CrfModel&)> score;
      if (validation) score = validation_f1;
      // The CRF keeps only the L2 part of the penalty, scaled to the summed
      // (not averaged) log-likelihood it maximizes.
      const double l2 = settings.en.lambda * (1.0 - settings.en.alpha) * fit_data.size();
      return crf_train(fit_data, support, settings.crf_pairwise, l2, settings.stop,
                       settings.en.max_iterations, score);
    }
    case ClassifierKind::lsf:
      return lsf_train(fit_data, settings.en, settings.stop);
  }
  throw std::logic_error("bad classifier kind");
}

std::vector<LabelVector> predict_all(const AnyModel& model, const MultiLabelDataset& data,
                                     const SupportSet* support, const PredictSettings& settings) {
  std::mt19937_64 rng(settings.seed);
  std::vector<LabelVector> out;
  out.reserve(data.size());
  for (int i = 0; i < data.size(); ++i)
    out.push_back(predict_one(model, data.instances[i], support, settings, rng));
  return out;
}

double mean_f1(const AnyModel& model, const MultiLabelDataset& data, const SupportSet* support,
               const PredictSettings& settings) {
  return evaluate(data.labels, predict_all(model, data, support, settings)).mean_instance_f1;
}

std::vector<RegCombo> standard_combos() {
  return {
      {"NoREG", false, false, false, false},
      {"L+E", true, true, false, false},
      {"L+E+S", true, true, true, false},
      {"L+E+G", true, true, false, true},
      {"All4", true, true, true, true},
  };
}

namespace {

PredictionStrategy combo_strategy(const RegCombo& combo) {
  if (combo.support && combo.gfm) return PredictionStrategy::support_gfm;
  if (combo.support) return PredictionStrategy::support_map;
  if (combo.gfm) return PredictionStrategy::sample_gfm;
  return PredictionStrategy::map;
}

}  // namespace

std::vector<AblationCell> run_ablation(const MultiLabelDataset& train,
                                       const MultiLabelDataset& test,
                                       const AblationSettings& settings) {
  const SupportSet support = build_support(train);
  std::vector<AblationCell> cells;
  for (ClassifierKind classifier : settings.classifiers) {
    for (const RegCombo& combo : settings.combos) {
      AblationCell cell;
      cell.classifier = classifier_name(classifier);
      cell.combo = combo.name;
      try {
        // CRF: no elastic-net, and sample-gfm is unavailable; its native MAP
        // is already support-restricted, so L+E == L+E+S.
        RegCombo effective = combo;
        if (classifier == ClassifierKind::crf) {
          effective.l1 = false;
          if (effective.gfm && !effective.support) {
            cell.failed = true;
            cell.error = "crf cannot sample";
            cells.push_back(cell);
            continue;
          }
        }
        double total = 0.0;
        const int n_seeds = std::max(1, settings.seeds);
        for (int seed = 0; seed < n_seeds; ++seed) {
          TrainSettings ts;
          ts.classifier = classifier;
          ts.en.lambda = settings.lambda;
          ts.en.alpha = effective.l1 ? settings.alpha : 0.0;
          ts.en.max_iterations = settings.max_iterations;
          ts.early_stop = effective.early_stop;
          ts.validation_strategy = combo_strategy(effective);
          ts.cbm_components = settings.cbm_components;
          ts.crf_pairwise = settings.crf_pairwise;
          ts.beam_width = settings.beam_width;
          ts.sample_count = settings.sample_count;
          ts.seed = static_cast<std::uint64_t>(seed);
          const AnyModel model = train_classifier(train, ts);
          PredictSettings ps;
          ps.strategy = combo_strategy(effective);
          ps.beam_width = settings.beam_width;
          ps.sample_count = settings.sample_count;
          ps.seed = static_cast<std::uint64_t>(seed) + 1000;
          total += mean_f1(model, test, &support, ps);
        }
        cell.mean_f1 = total / std::max(1, settings.seeds);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::vector<GridCell> run_grid(const MultiLabelDataset& train, const MultiLabelDataset& validation,
                               const TrainSettings& base, const std::vector<double>& lambdas,
                               const std::vector<double>& alphas) {
  if (lambdas.empty() || alphas.empty()) throw std::invalid_argument("run_grid: empty grid");
  const SupportSet support = build_support(train);
  std::vector<GridCell> cells;
  for (double lambda : lambdas) {
    for (double alpha : alphas) {
      GridCell cell;
      cell.lambda = lambda;
      cell.alpha = alpha;
      try {
        TrainSettings ts = base;
        ts.en.lambda = lambda;
        ts.en.alpha = alpha;
        const AnyModel model = train_classifier(train, ts);
        PredictSettings ps;
        ps.strategy = base.validation_strategy;
        ps.beam_width = base.beam_width;
        ps.sample_count = base.sample_count;
        ps.seed = base.seed;
        cell.validation_f1 = mean_f1(model, validation, &support, ps);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace mlc
