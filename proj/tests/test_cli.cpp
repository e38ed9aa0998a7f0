// End-to-end checks of the command-line driver. The binary path arrives as
// argv[1]; every scenario works in a scratch directory under the system temp.
#define DOCTEST_CONFIG_IMPLEMENT

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mlc/dataio.hpp"
#include "mlc/metrics.hpp"

namespace {

std::string g_binary;
std::filesystem::path g_dir;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string out_file = (g_dir / "cmd_output.txt").string();
  const std::string command = g_binary + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(command.c_str());
  std::ifstream in(out_file, std::ios::binary);
  RunResult result;
  result.output = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string path_of(const std::string& name) { return (g_dir / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double field(const std::string& tsv, const std::string& key) {
  std::istringstream in(tsv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "\t", 0) == 0) return std::stod(line.substr(key.size() + 1));
  }
  FAIL("missing field " << key << " in:\n" << tsv);
  return 0.0;
}

}  // namespace

TEST_CASE("synthetic generation is deterministic and writes a manifest") {
  auto a = run_cli("gen-synthetic --out " + path_of("gen_a.txt") +
                   " --n 80 --d 20 --l 4 --k 2 --noise 0 --seed 3");
  REQUIRE(a.exit_code == 0);
  CHECK(field(a.output, "support_size") == 2);  // zero noise, two clusters

  auto b = run_cli("gen-synthetic --out " + path_of("gen_b.txt") +
                   " --n 80 --d 20 --l 4 --k 2 --noise 0 --seed 3");
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(path_of("gen_a.txt")) == slurp(path_of("gen_b.txt")));
  CHECK(std::filesystem::exists(path_of("gen_a.txt") + ".manifest.json"));
}

TEST_CASE("train, predict, eval pipeline on easy synthetic data") {
  REQUIRE(run_cli("gen-synthetic --out " + path_of("train.txt") +
                  " --n 300 --d 30 --l 4 --k 2 --noise 0.02 --seed 1")
              .exit_code == 0);
  REQUIRE(run_cli("gen-synthetic --out " + path_of("test.txt") +
                  " --n 100 --d 30 --l 4 --k 2 --noise 0.02 --seed 2")
              .exit_code == 0);

  auto train = run_cli("train --data " + path_of("train.txt") + " --model " +
                       path_of("br.model") + " --classifier br --lambda 1e-4 --alpha 0.5");
  REQUIRE(train.exit_code == 0);
  CHECK(field(train.output, "byte_size") > 0);

  auto predict = run_cli("predict --model " + path_of("br.model") + " --data " +
                         path_of("test.txt") + " --out " + path_of("br.pred") +
                         " --strategy support-gfm");
  REQUIRE(predict.exit_code == 0);
  CHECK(field(predict.output, "n_instances") == 100);

  // each line is a comma-separated label list parseable against the dataset
  mlc::MultiLabelDataset test = mlc::parse_dataset(path_of("test.txt"));
  std::istringstream preds(slurp(path_of("br.pred")));
  std::string line;
  int rows = 0;
  while (std::getline(preds, line)) ++rows;
  CHECK(rows == test.size());

  auto eval = run_cli("eval --truth " + path_of("test.txt") + " --predictions " +
                      path_of("br.pred") + " --out " + path_of("br.eval.json"));
  REQUIRE(eval.exit_code == 0);
  CHECK(field(eval.output, "mean_instance_f1") > 0.8);  // near-noiseless two-cluster data
  CHECK(field(eval.output, "n_instances") == 100);

  auto size = run_cli("model-size --model " + path_of("br.model"));
  REQUIRE(size.exit_code == 0);
  CHECK(field(size.output, "nonzero_weights") > 0);
  CHECK(field(size.output, "byte_size") ==
        static_cast<double>(std::filesystem::file_size(path_of("br.model"))));
}

TEST_CASE("identical predictions evaluate to perfect scores") {
  REQUIRE(run_cli("gen-synthetic --out " + path_of("gold.txt") +
                  " --n 50 --d 10 --l 3 --k 2 --noise 0.05 --seed 9")
              .exit_code == 0);
  mlc::MultiLabelDataset gold = mlc::parse_dataset(path_of("gold.txt"));
  std::ofstream out(path_of("gold.pred"));
  for (const auto& y : gold.labels) out << y.canonical_key() << "\n";
  out.close();
  auto eval = run_cli("eval --truth " + path_of("gold.txt") + " --predictions " +
                      path_of("gold.pred"));
  REQUIRE(eval.exit_code == 0);
  CHECK(field(eval.output, "mean_instance_f1") == 1.0);
  CHECK(field(eval.output, "subset_accuracy") == 1.0);
  CHECK(field(eval.output, "hamming_loss") == 0.0);
}

TEST_CASE("single-row eval matches the hand-computed overlap") {
  std::ofstream truth(path_of("one.txt"));
  truth << "#meta N=1 D=2 L=3\n1\t0:1\n";
  truth.close();
  std::ofstream pred(path_of("one.pred"));
  pred << "1,2\n";
  pred.close();
  auto eval = run_cli("eval --truth " + path_of("one.txt") + " --predictions " +
                      path_of("one.pred"));
  REQUIRE(eval.exit_code == 0);
  CHECK(field(eval.output, "mean_instance_f1") == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("cbm defaults to 20 components; crf honors --no-pairwise") {
  REQUIRE(run_cli("gen-synthetic --out " + path_of("small.txt") +
                  " --n 120 --d 12 --l 3 --k 2 --noise 0.02 --seed 4")
              .exit_code == 0);

  auto cbm = run_cli("train --data " + path_of("small.txt") + " --model " +
                     path_of("cbm.model") + " --classifier cbm --max-iterations 20 --lambda 1e-3");
  REQUIRE(cbm.exit_code == 0);
  auto loaded = mlc::load_model(path_of("cbm.model"));
  CHECK(std::get<mlc::CbmModel>(loaded.model).num_components() == 20);
  CHECK(loaded.manifest["components"] == 20);

  auto crf = run_cli("train --data " + path_of("small.txt") + " --model " +
                     path_of("crf.model") +
                     " --classifier crf --no-pairwise --max-iterations 40 --strategy support-map");
  REQUIRE(crf.exit_code == 0);
  auto crf_loaded = mlc::load_model(path_of("crf.model"));
  const auto& crf_model = std::get<mlc::CrfModel>(crf_loaded.model);
  CHECK_FALSE(crf_model.include_pairwise());
  CHECK(crf_model.pairwise().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid strategy combinations fail with a clear error") {
  REQUIRE(run_cli("gen-synthetic --out " + path_of("combo.txt") +
                  " --n 100 --d 10 --l 3 --k 2 --noise 0.02 --seed 6")
              .exit_code == 0);
  REQUIRE(run_cli("train --data " + path_of("combo.txt") + " --model " + path_of("c_crf.model") +
                  " --classifier crf --max-iterations 30 --strategy support-map")
              .exit_code == 0);
  REQUIRE(run_cli("train --data " + path_of("combo.txt") + " --model " + path_of("c_lsf.model") +
                  " --classifier lsf --max-iterations 60")
              .exit_code == 0);

  auto bad_crf = run_cli("predict --model " + path_of("c_crf.model") + " --data " +
                         path_of("combo.txt") + " --out " + path_of("x.pred") +
                         " --strategy sample-gfm");
  CHECK(bad_crf.exit_code != 0);
  CHECK(bad_crf.output.find("sample-gfm") != std::string::npos);

  auto bad_lsf = run_cli("predict --model " + path_of("c_lsf.model") + " --data " +
                         path_of("combo.txt") + " --out " + path_of("x.pred") +
                         " --strategy support-map");
  CHECK(bad_lsf.exit_code != 0);
  CHECK(bad_lsf.output.find("gfm") != std::string::npos);

  auto good_lsf = run_cli("predict --model " + path_of("c_lsf.model") + " --data " +
                          path_of("combo.txt") + " --out " + path_of("lsf.pred") +
                          " --strategy gfm");
  CHECK(good_lsf.exit_code == 0);
}

TEST_CASE("predictions are reproducible given the same seed") {
  REQUIRE(run_cli("gen-synthetic --out " + path_of("rep.txt") +
                  " --n 150 --d 15 --l 4 --k 2 --noise 0.05 --seed 8")
              .exit_code == 0);
  REQUIRE(run_cli("train --data " + path_of("rep.txt") + " --model " + path_of("rep.model") +
                  " --classifier pcc --lambda 1e-4 --alpha 0.5 --seed 5")
              .exit_code == 0);
  for (const char* run : {"r1", "r2"}) {
    REQUIRE(run_cli("predict --model " + path_of("rep.model") + " --data " + path_of("rep.txt") +
                    " --out " + path_of(std::string("rep.") + run) +
                    " --strategy sample-gfm --samples 200 --seed 7")
                .exit_code == 0);
  }
  CHECK(slurp(path_of("rep.r1")) == slurp(path_of("rep.r2")));

  // training twice gives byte-identical archives
  REQUIRE(run_cli("train --data " + path_of("rep.txt") + " --model " + path_of("rep2.model") +
                  " --classifier pcc --lambda 1e-4 --alpha 0.5 --seed 5")
              .exit_code == 0);
  CHECK(slurp(path_of("rep.model")) == slurp(path_of("rep2.model")));
}

TEST_CASE("tune returns the best grid cell and a heatmap-ready report") {
  REQUIRE(run_cli("gen-synthetic --out " + path_of("tune.txt") +
                  " --n 200 --d 20 --l 3 --k 2 --noise 0.05 --seed 10")
              .exit_code == 0);
  auto tune = run_cli("tune --data " + path_of("tune.txt") + " --out " + path_of("grid.json") +
                      " --classifier br --lambdas 1e-4,10 --alphas 0,1 --max-iterations 100");
  REQUIRE(tune.exit_code == 0);
  CHECK(field(tune.output, "best_lambda") == doctest::Approx(1e-4));

  const std::string grid = slurp(path_of("grid.json"));
  CHECK(grid.find("log10_lambda") != std::string::npos);
  CHECK(grid.find("validation_f1") != std::string::npos);
}

TEST_CASE("ablation emits one row per classifier and combo") {
  REQUIRE(run_cli("gen-synthetic --out " + path_of("ab_train.txt") +
                  " --n 150 --d 16 --l 3 --k 2 --noise 0.05 --seed 12")
              .exit_code == 0);
  REQUIRE(run_cli("gen-synthetic --out " + path_of("ab_test.txt") +
                  " --n 60 --d 16 --l 3 --k 2 --noise 0.05 --seed 13")
              .exit_code == 0);
  auto ablate = run_cli("ablate --train " + path_of("ab_train.txt") + " --test " +
                        path_of("ab_test.txt") + " --out " + path_of("ablation.json") +
                        " --classifiers br,cbm --seeds 1 --components 2 --max-iterations 40");
  REQUIRE(ablate.exit_code == 0);
  int rows = 0;
  std::istringstream lines(ablate.output);
  std::string line;
  while (std::getline(lines, line)) rows += line.find('\t') != std::string::npos;
  CHECK(rows == 10);  // 2 classifiers x 5 combos
  CHECK(std::filesystem::exists(path_of("ablation.json")));
}

TEST_CASE("errors exit nonzero with a structured message") {
  auto missing = run_cli("train --data " + path_of("does_not_exist.txt") + " --model " +
                         path_of("x.model"));
  CHECK(missing.exit_code != 0);
  CHECK(missing.output.find("error\t") != std::string::npos);

  std::ofstream bad(path_of("bad.txt"));
  bad << "#meta N=1 D=2 L=2\n0 0:1\n";  // missing TAB
  bad.close();
  auto parse = run_cli("eval --truth " + path_of("bad.txt") + " --predictions " +
                       path_of("bad.txt"));
  CHECK(parse.exit_code != 0);
  CHECK(parse.output.find("bad.txt:2") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path-to-cli-binary> [doctest args]\n");
    return 2;
  }
  g_binary = argv[1];
  g_dir = std::filesystem::temp_directory_path() / "mlc_cli_tests";
  std::filesystem::create_directories(g_dir);
  doctest::Context context;
  context.applyCommandLine(argc - 1, argv + 1);
  const int rc = context.run();
  std::filesystem::remove_all(g_dir);
  return rc;
}
