// Command-line driver: train, tune, predict, eval, ablate, model-size,
// gen-synthetic. Every command writes a .manifest.json next to its output
// with the echoed configuration, so runs are reproducible from artifacts.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlc/dataio.hpp"
#include "mlc/experiment.hpp"
#include "mlc/metrics.hpp"

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

void write_manifest(const std::string& output_path, json config) {
  config["version"] = kVersion;
  write_text(output_path + ".manifest.json", config.dump(2) + "\n");
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) out.push_back(std::stod(token));
  return out;
}

std::vector<int> parse_ints(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) out.push_back(std::stoi(token));
  return out;
}

std::string format_predictions(const std::vector<mlc::LabelVector>& predictions) {
  std::string out;
  for (const auto& y : predictions) {
    out += y.canonical_key();
    out += '\n';
  }
  return out;
}

std::vector<mlc::LabelVector> parse_predictions(const std::string& path, int num_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open predictions file: " + path);
  std::vector<mlc::LabelVector> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<int> ids;
    if (!line.empty()) {
      try {
        ids = parse_ints(line);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad label list");
      }
    }
    try {
      out.emplace_back(std::move(ids), num_labels);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void check_strategy(mlc::ModelKind kind, mlc::PredictionStrategy strategy) {
  if (kind == mlc::ModelKind::lsf && strategy != mlc::PredictionStrategy::gfm_direct)
    throw std::runtime_error("lsf models support only --strategy gfm");
  if (kind != mlc::ModelKind::lsf && strategy == mlc::PredictionStrategy::gfm_direct)
    throw std::runtime_error("--strategy gfm applies only to lsf models");
  if (kind == mlc::ModelKind::crf && strategy == mlc::PredictionStrategy::sample_gfm)
    throw std::runtime_error("sample-gfm is unavailable for crf (no exact sampler)");
}

json eval_to_json(const mlc::EvalReport& r) {
  return {{"mean_instance_f1", r.mean_instance_f1}, {"mean_precision", r.mean_precision},
          {"mean_recall", r.mean_recall},           {"subset_accuracy", r.subset_accuracy},
          {"hamming_loss", r.hamming_loss},         {"n_instances", r.n_instances}};
}

std::string eval_to_text(const mlc::EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "mean_instance_f1\t" << r.mean_instance_f1 << "\n"
      << "mean_precision\t" << r.mean_precision << "\n"
      << "mean_recall\t" << r.mean_recall << "\n"
      << "subset_accuracy\t" << r.subset_accuracy << "\n"
      << "hamming_loss\t" << r.hamming_loss << "\n"
      << "n_instances\t" << r.n_instances << "\n";
  return out.str();
}

struct SharedTrainOptions {
  std::string data_path;
  std::string classifier = "br";
  double lambda = 1e-4;
  double alpha = 0.0;
  int max_iterations = 500;
  bool early_stop = false;
  double validation_fraction = 0.2;
  std::string strategy = "support-gfm";
  int components = 20;
  std::string pcc_order;
  bool no_pairwise = false;
  int beam_width = 10;
  int sample_count = 1000;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data_path, "training dataset file")->required();
    cmd->add_option("--classifier", classifier, "br|pcc|cbm|crf|lsf");
    cmd->add_option("--lambda", lambda, "overall penalty strength");
    cmd->add_option("--alpha", alpha, "L1 ratio in [0,1]; 0 = pure L2");
    cmd->add_option("--max-iterations", max_iterations, "training iteration cap");
    cmd->add_flag("--early-stop", early_stop, "hold out validation rows, keep the best checkpoint");
    cmd->add_option("--validation-fraction", validation_fraction, "early-stop holdout fraction");
    cmd->add_option("--strategy", strategy, "validation/prediction strategy");
    cmd->add_option("--components", components, "cbm mixture components");
    cmd->add_option("--pcc-order", pcc_order, "comma-separated chain order");
    cmd->add_flag("--no-pairwise", no_pairwise, "crf without pairwise weights");
    cmd->add_option("--beam", beam_width, "pcc beam width");
    cmd->add_option("--samples", sample_count, "sample count for sample-gfm");
    cmd->add_option("--seed", seed, "random seed");
  }

  mlc::TrainSettings to_settings() const {
    mlc::TrainSettings ts;
    ts.classifier = mlc::classifier_from_name(classifier);
    ts.en.lambda = lambda;
    ts.en.alpha = alpha;
    ts.en.max_iterations = max_iterations;
    ts.early_stop = early_stop;
    ts.validation_fraction = validation_fraction;
    ts.validation_strategy = mlc::strategy_from_name(strategy);
    if (ts.classifier == mlc::ClassifierKind::lsf)
      ts.validation_strategy = mlc::PredictionStrategy::gfm_direct;
    ts.cbm_components = components;
    if (!pcc_order.empty()) ts.pcc_order = parse_ints(pcc_order);
    ts.crf_pairwise = !no_pairwise;
    ts.beam_width = beam_width;
    ts.sample_count = sample_count;
    ts.seed = seed;
    return ts;
  }

  json to_json() const {
    return {{"data", data_path},
            {"classifier", classifier},
            {"lambda", lambda},
            {"alpha", alpha},
            {"max_iterations", max_iterations},
            {"early_stop", early_stop},
            {"validation_fraction", validation_fraction},
            {"strategy", strategy},
            {"components", components},
            {"pcc_order", pcc_order},
            {"no_pairwise", no_pairwise},
            {"beam", beam_width},
            {"samples", sample_count},
            {"seed", seed}};
  }
};

int cmd_train(const SharedTrainOptions& opts, const std::string& model_path) {
  mlc::MultiLabelDataset train = mlc::parse_dataset(opts.data_path);
  mlc::TrainSettings settings = opts.to_settings();
  if (settings.classifier == mlc::ClassifierKind::crf)
    check_strategy(mlc::ModelKind::crf, settings.validation_strategy);
  mlc::AnyModel model = mlc::train_classifier(train, settings);

  json manifest = opts.to_json();
  manifest["command"] = "train";
  manifest["train_data"] = opts.data_path;
  mlc::ArchiveStats stats = mlc::save_model(model, model_path, manifest);
  write_manifest(model_path, manifest);

  std::cout << "model\t" << model_path << "\n"
            << "byte_size\t" << stats.byte_size << "\n"
            << "nonzero_weights\t" << stats.nonzero_weight_count << "\n"
            << "union_features\t" << stats.union_feature_count << "\n";
  return 0;
}

int cmd_tune(const SharedTrainOptions& opts, const std::string& lambdas_csv,
             const std::string& alphas_csv, const std::string& out_path) {
  mlc::MultiLabelDataset full = mlc::parse_dataset(opts.data_path);
  auto [train, validation] =
      mlc::split_train_validation(full, opts.validation_fraction, opts.seed);
  std::vector<double> lambdas = parse_doubles(lambdas_csv);
  std::vector<double> alphas = parse_doubles(alphas_csv);
  std::vector<mlc::GridCell> grid =
      mlc::run_grid(train, validation, opts.to_settings(), lambdas, alphas);

  const mlc::GridCell* best = nullptr;
  json cells = json::array();
  for (const auto& cell : grid) {
    cells.push_back({{"lambda", cell.lambda},
                     {"log10_lambda", std::log10(cell.lambda)},
                     {"alpha", cell.alpha},
                     {"validation_f1", cell.validation_f1},
                     {"failed", cell.failed},
                     {"error", cell.error}});
    if (!cell.failed && (best == nullptr || cell.validation_f1 > best->validation_f1))
      best = &cell;
  }
  if (best == nullptr) throw std::runtime_error("tune: every grid cell failed");

  json report{{"grid", cells},
              {"best", {{"lambda", best->lambda}, {"alpha", best->alpha},
                        {"validation_f1", best->validation_f1}}}};
  write_text(out_path, report.dump(2) + "\n");
  json manifest = opts.to_json();
  manifest["command"] = "tune";
  manifest["lambdas"] = lambdas_csv;
  manifest["alphas"] = alphas_csv;
  write_manifest(out_path, manifest);

  std::cout << "best_lambda\t" << best->lambda << "\n"
            << "best_alpha\t" << best->alpha << "\n"
            << "best_validation_f1\t" << best->validation_f1 << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path, const std::string& strategy_name,
                const std::string& support_data, int beam_width, int sample_count,
                std::uint64_t seed) {
  mlc::LoadedModel loaded = mlc::load_model(model_path);
  const mlc::PredictionStrategy strategy = mlc::strategy_from_name(strategy_name);
  check_strategy(mlc::kind_of(loaded.model), strategy);

  mlc::MultiLabelDataset data = mlc::parse_dataset(data_path);

  std::optional<mlc::SupportSet> support;
  const bool needs_support = strategy == mlc::PredictionStrategy::support_map ||
                             strategy == mlc::PredictionStrategy::support_gfm ||
                             (strategy == mlc::PredictionStrategy::map &&
                              (mlc::kind_of(loaded.model) == mlc::ModelKind::cbm ||
                               mlc::kind_of(loaded.model) == mlc::ModelKind::crf));
  if (needs_support) {
    std::string source = support_data;
    if (source.empty() && loaded.manifest.contains("train_data"))
      source = loaded.manifest["train_data"].get<std::string>();
    if (source.empty())
      throw std::runtime_error(
          "this strategy needs the training label combinations; pass --support-data");
    support = mlc::build_support(mlc::parse_dataset(source));
  }

  mlc::PredictSettings settings{strategy, beam_width, sample_count, seed};
  std::vector<mlc::LabelVector> predictions =
      mlc::predict_all(loaded.model, data, support ? &*support : nullptr, settings);
  write_text(out_path, format_predictions(predictions));
  write_manifest(out_path, {{"command", "predict"},
                            {"model", model_path},
                            {"data", data_path},
                            {"strategy", strategy_name},
                            {"support_data", support_data},
                            {"beam", beam_width},
                            {"samples", sample_count},
                            {"seed", seed}});
  std::cout << "predictions\t" << out_path << "\n"
            << "n_instances\t" << predictions.size() << "\n";
  return 0;
}

int cmd_eval(const std::string& truth_path, const std::string& predictions_path,
             const std::string& out_path) {
  mlc::MultiLabelDataset truth = mlc::parse_dataset(truth_path);
  std::vector<mlc::LabelVector> predictions =
      parse_predictions(predictions_path, truth.num_labels);
  if (static_cast<int>(predictions.size()) != truth.size())
    throw std::runtime_error("eval: " + std::to_string(predictions.size()) +
                             " predictions for " + std::to_string(truth.size()) + " instances");
  mlc::EvalReport report = mlc::evaluate(truth.labels, predictions);
  std::cout << eval_to_text(report);
  if (!out_path.empty()) {
    write_text(out_path, eval_to_json(report).dump(2) + "\n");
    write_manifest(out_path, {{"command", "eval"},
                              {"truth", truth_path},
                              {"predictions", predictions_path}});
  }
  return 0;
}

int cmd_ablate(const std::string& train_path, const std::string& test_path,
               const std::string& out_path, const std::string& classifiers_csv, int seeds,
               double lambda, double alpha, int components, int max_iterations,
               bool no_pairwise) {
  mlc::AblationSettings settings;
  settings.classifiers.clear();
  std::stringstream ss(classifiers_csv);
  std::string token;
  while (std::getline(ss, token, ','))
    settings.classifiers.push_back(mlc::classifier_from_name(token));
  settings.seeds = seeds;
  settings.lambda = lambda;
  settings.alpha = alpha;
  settings.cbm_components = components;
  settings.max_iterations = max_iterations;
  settings.crf_pairwise = !no_pairwise;

  mlc::MultiLabelDataset train = mlc::parse_dataset(train_path);
  mlc::MultiLabelDataset test = mlc::parse_dataset(test_path);
  std::vector<mlc::AblationCell> cells = mlc::run_ablation(train, test, settings);

  json rows = json::array();
  for (const auto& cell : cells) {
    rows.push_back({{"classifier", cell.classifier},
                    {"combo", cell.combo},
                    {"mean_f1", cell.mean_f1},
                    {"failed", cell.failed},
                    {"error", cell.error}});
    std::cout << cell.classifier << "\t" << cell.combo << "\t";
    if (cell.failed)
      std::cout << "FAILED\t" << cell.error << "\n";
    else
      std::cout << cell.mean_f1 << "\n";
  }
  write_text(out_path, json{{"cells", rows}}.dump(2) + "\n");
  write_manifest(out_path, {{"command", "ablate"},
                            {"train", train_path},
                            {"test", test_path},
                            {"classifiers", classifiers_csv},
                            {"seeds", seeds},
                            {"lambda", lambda},
                            {"alpha", alpha},
                            {"components", components},
                            {"max_iterations", max_iterations},
                            {"no_pairwise", no_pairwise}});
  return 0;
}

int cmd_model_size(const std::string& model_path) {
  mlc::LoadedModel loaded = mlc::load_model(model_path);
  mlc::ArchiveStats stats = mlc::model_stats(loaded.model);
  std::cout << "byte_size\t" << std::filesystem::file_size(model_path) << "\n"
            << "payload_byte_size\t" << stats.byte_size << "\n"
            << "nonzero_weights\t" << stats.nonzero_weight_count << "\n"
            << "union_features\t" << stats.union_feature_count << "\n";
  return 0;
}

int cmd_gen_synthetic(const std::string& out_path, int n, int d, int l, int k, double noise,
                      double irrelevant_fraction, std::uint64_t seed) {
  mlc::SyntheticSpec spec{n, d, l, k, noise, irrelevant_fraction, seed};
  mlc::SyntheticData data = mlc::generate_synthetic(spec);
  mlc::write_dataset(data.dataset, out_path);
  write_manifest(out_path, {{"command", "gen-synthetic"},
                            {"n", n},
                            {"d", d},
                            {"l", l},
                            {"k", k},
                            {"noise", noise},
                            {"irrelevant_fraction", irrelevant_fraction},
                            {"seed", seed}});
  std::cout << "dataset\t" << out_path << "\n"
            << "support_size\t" << mlc::build_support(data.dataset).size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-label classification toolkit"};
  app.require_subcommand(1);

  SharedTrainOptions train_opts;
  std::string model_path;
  CLI::App* train = app.add_subcommand("train", "train a classifier and save its archive");
  train_opts.attach(train);
  train->add_option("--model", model_path, "output model archive")->required();

  SharedTrainOptions tune_opts;
  std::string lambdas_csv = "1e-5,1e-4,1e-3,1e-2";
  std::string alphas_csv = "0,0.5,1";
  std::string tune_out;
  CLI::App* tune = app.add_subcommand("tune", "grid search over lambda and alpha");
  tune_opts.attach(tune);
  tune->add_option("--lambdas", lambdas_csv, "comma-separated penalty strengths");
  tune->add_option("--alphas", alphas_csv, "comma-separated L1 ratios");
  tune->add_option("--out", tune_out, "grid report (json)")->required();

  std::string predict_model, predict_data, predict_out, predict_strategy = "support-gfm";
  std::string support_data;
  int predict_beam = 10, predict_samples = 1000;
  std::uint64_t predict_seed = 0;
  CLI::App* predict = app.add_subcommand("predict", "write one label list per instance");
  predict->add_option("--model", predict_model)->required();
  predict->add_option("--data", predict_data)->required();
  predict->add_option("--out", predict_out)->required();
  predict->add_option("--strategy", predict_strategy, "map|support-map|support-gfm|sample-gfm|gfm");
  predict->add_option("--support-data", support_data,
                      "dataset providing the label combinations (default: the archive's "
                      "recorded training data)");
  predict->add_option("--beam", predict_beam);
  predict->add_option("--samples", predict_samples);
  predict->add_option("--seed", predict_seed);

  std::string eval_truth, eval_predictions, eval_out;
  CLI::App* eval = app.add_subcommand("eval", "score predictions against gold labels");
  eval->add_option("--truth", eval_truth, "gold dataset file")->required();
  eval->add_option("--predictions", eval_predictions)->required();
  eval->add_option("--out", eval_out, "optional json report");

  std::string ablate_train, ablate_test, ablate_out;
  std::string ablate_classifiers = "br,pcc,cbm,crf";
  int ablate_seeds = 3, ablate_components = 4, ablate_iterations = 100;
  double ablate_lambda = 1e-4, ablate_alpha = 0.5;
  bool ablate_no_pairwise = false;
  CLI::App* ablate = app.add_subcommand("ablate", "regularization on/off table (L/E/S/G)");
  ablate->add_option("--train", ablate_train)->required();
  ablate->add_option("--test", ablate_test)->required();
  ablate->add_option("--out", ablate_out)->required();
  ablate->add_option("--classifiers", ablate_classifiers);
  ablate->add_option("--seeds", ablate_seeds);
  ablate->add_option("--lambda", ablate_lambda);
  ablate->add_option("--alpha", ablate_alpha);
  ablate->add_option("--components", ablate_components);
  ablate->add_option("--max-iterations", ablate_iterations);
  ablate->add_flag("--no-pairwise", ablate_no_pairwise);

  std::string size_model;
  CLI::App* model_size = app.add_subcommand("model-size", "archive size and sparsity report");
  model_size->add_option("--model", size_model)->required();

  std::string gen_out;
  int gen_n = 1000, gen_d = 100, gen_l = 8, gen_k = 2;
  double gen_noise = 0.05, gen_irrelevant = 0.5;
  std::uint64_t gen_seed = 0;
  CLI::App* gen = app.add_subcommand("gen-synthetic", "clustered multi-label dataset");
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--n", gen_n);
  gen->add_option("--d", gen_d);
  gen->add_option("--l", gen_l);
  gen->add_option("--k", gen_k);
  gen->add_option("--noise", gen_noise);
  gen->add_option("--irrelevant-fraction", gen_irrelevant);
  gen->add_option("--seed", gen_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_opts, model_path);
    if (tune->parsed()) return cmd_tune(tune_opts, lambdas_csv, alphas_csv, tune_out);
    if (predict->parsed())
      return cmd_predict(predict_model, predict_data, predict_out, predict_strategy,
                         support_data, predict_beam, predict_samples, predict_seed);
    if (eval->parsed()) return cmd_eval(eval_truth, eval_predictions, eval_out);
    if (ablate->parsed())
      return cmd_ablate(ablate_train, ablate_test, ablate_out, ablate_classifiers, ablate_seeds,
                        ablate_lambda, ablate_alpha, ablate_components, ablate_iterations,
                        ablate_no_pairwise);
    if (model_size->parsed()) return cmd_model_size(size_model);
    if (gen->parsed())
      return cmd_gen_synthetic(gen_out, gen_n, gen_d, gen_l, gen_k, gen_noise, gen_irrelevant,
                               gen_seed);
  } catch (const std::exception& e) {
    std::cerr << "error\t" << e.what() << "\n";
    return 1;
  }
  return 2;
}
