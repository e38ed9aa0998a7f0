#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "mlc/dataio.hpp"
#include "test_util.hpp"

using namespace mlc;
using namespace mlc::testutil;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

MultiLabelDataset random_dataset(int n, int d, int l, std::mt19937_64& rng) {
  MultiLabelDataset ds;
  ds.num_features = d;
  ds.num_labels = l;
  for (int i = 0; i < n; ++i) {
    ds.instances.push_back(random_instance(d, rng, 0.4));
    ds.labels.push_back(LabelVector::from_mask(rng() % (std::uint64_t{1} << l), l));
  }
  return ds;
}

}  // namespace

TEST_CASE("dataset text parsing") {
  const std::string text =
      "#meta N=3 D=5 L=4\n"
      "0,2\t1:0.5 3:-2\n"
      "\t0:1\n"
      "3\t\n";
  MultiLabelDataset ds = parse_dataset_text(text);
  CHECK(ds.size() == 3);
  CHECK(ds.num_features == 5);
  CHECK(ds.num_labels == 4);
  CHECK(ds.labels[0] == LabelVector({0, 2}, 4));
  CHECK(ds.labels[1].empty());
  CHECK(ds.labels[2] == LabelVector({3}, 4));
  CHECK(ds.instances[0].entries() ==
        std::vector<SparseInstance::Entry>{{1, 0.5}, {3, -2.0}});
  CHECK(ds.instances[2].entries().empty());
}

TEST_CASE("parse errors carry the origin and line number") {
  auto expect_message = [](const std::string& text, const std::string& needle) {
    try {
      parse_dataset_text(text, "input.txt");
      FAIL("expected a parse error for: " << text);
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_message("#meta N=1 D=2 L=2\n0\t5:1\n", "input.txt:2");      // feature out of range
  expect_message("#meta N=1 D=2 L=2\n7\t0:1\n", "input.txt:2");      // label out of range
  expect_message("#meta N=1 D=2 L=2\n0\t1:1 0:1\n", "input.txt:2");  // indices not increasing
  expect_message("#meta N=1 D=2 L=2\n0 0:1\n", "input.txt:2");       // missing tab
  expect_message("#meta N=2 D=2 L=2\n0\t0:1\n", "input.txt");        // row count mismatch
}

TEST_CASE("format then parse round-trips to identical bytes") {
  std::mt19937_64 rng(301);
  MultiLabelDataset ds = random_dataset(40, 12, 5, rng);
  const std::string once = format_dataset(ds);
  MultiLabelDataset reparsed = parse_dataset_text(once);
  CHECK(reparsed.size() == ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(reparsed.labels[i] == ds.labels[i]);
    CHECK(reparsed.instances[i] == ds.instances[i]);
  }
  CHECK(format_dataset(reparsed) == once);

  const std::string path = temp_path("mlc_roundtrip.txt");
  write_dataset(ds, path);
  CHECK(slurp(path) == once);
  MultiLabelDataset from_file = parse_dataset(path);
  CHECK(format_dataset(from_file) == once);
  std::remove(path.c_str());
}

TEST_CASE("awkward values survive the round trip") {
  MultiLabelDataset ds;
  ds.num_features = 3;
  ds.num_labels = 2;
  ds.instances.push_back(SparseInstance({{0, 0.1}, {2, 1e-17}}, 3));
  ds.labels.push_back(LabelVector({0}, 2));
  ds.instances.push_back(SparseInstance({{1, -3.141592653589793}}, 3));
  ds.labels.push_back(LabelVector({}, 2));
  MultiLabelDataset back = parse_dataset_text(format_dataset(ds));
  CHECK(back.instances[0].entries()[0].value == 0.1);
  CHECK(back.instances[0].entries()[1].value == 1e-17);
  CHECK(back.instances[1].entries()[0].value == -3.141592653589793);
}

TEST_CASE("train/validation split is deterministic and partitions the data") {
  std::mt19937_64 rng(307);
  MultiLabelDataset ds = random_dataset(50, 8, 4, rng);

  auto [train_a, val_a] = split_train_validation(ds, 0.2, 99);
  auto [train_b, val_b] = split_train_validation(ds, 0.2, 99);
  CHECK(val_a.size() == 10);
  CHECK(train_a.size() == 40);
  CHECK(format_dataset(train_a) == format_dataset(train_b));
  CHECK(format_dataset(val_a) == format_dataset(val_b));

  auto [train_c, val_c] = split_train_validation(ds, 0.2, 100);
  CHECK(format_dataset(val_a) != format_dataset(val_c));

  // multiset oracle: the union of the parts is exactly the original rows
  std::multiset<std::string> original, parts;
  MultiLabelDataset single;
  single.num_features = 8;
  single.num_labels = 4;
  single.instances.resize(1);
  single.labels.resize(1);
  auto row_key = [&](const MultiLabelDataset& d, int i) {
    single.instances[0] = d.instances[i];
    single.labels[0] = d.labels[i];
    return format_dataset(single);
  };
  for (int i = 0; i < ds.size(); ++i) original.insert(row_key(ds, i));
  for (int i = 0; i < train_a.size(); ++i) parts.insert(row_key(train_a, i));
  for (int i = 0; i < val_a.size(); ++i) parts.insert(row_key(val_a, i));
  CHECK(original == parts);
}

TEST_CASE("synthetic generation is deterministic and honors its contract") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.d = 40;
  spec.l = 6;
  spec.k_true = 3;
  spec.noise_rate = 0.1;
  spec.seed = 5;

  SyntheticData a = generate_synthetic(spec);
  SyntheticData b = generate_synthetic(spec);
  CHECK(format_dataset(a.dataset) == format_dataset(b.dataset));
  CHECK(a.cluster_ids == b.cluster_ids);

  spec.seed = 6;
  SyntheticData c = generate_synthetic(spec);
  CHECK(format_dataset(a.dataset) != format_dataset(c.dataset));

  CHECK(a.dataset.size() == 200);
  CHECK(a.dataset.num_features == 40);
  CHECK(a.dataset.num_labels == 6);
  a.dataset.validate();
  REQUIRE(a.cluster_label_sets.size() == 3);
  REQUIRE(a.feature_relevant.size() == 40);
  int relevant = 0;
  for (char f : a.feature_relevant) relevant += f;
  CHECK(relevant == 20);  // half the features are cluster-characteristic

  // every cluster occurs, and labels mostly match the cluster's label set
  std::map<int, int> cluster_counts;
  int label_matches = 0;
  for (int i = 0; i < spec.n; ++i) {
    const int k = a.cluster_ids[i];
    REQUIRE(k >= 0);
    REQUIRE(k < 3);
    ++cluster_counts[k];
    label_matches += a.dataset.labels[i] == a.cluster_label_sets[k];
  }
  CHECK(cluster_counts.size() == 3);
  CHECK(label_matches > 60);   // noise flips some bits but not most vectors
  CHECK(label_matches < 200);  // with 10% bit noise some vectors must differ

  // true marginals match the flip model exactly
  for (int i = 0; i < spec.n; ++i) {
    for (int l = 0; l < spec.l; ++l) {
      const bool base = a.cluster_label_sets[a.cluster_ids[i]].contains(l);
      CHECK(a.true_marginals(i, l) ==
            doctest::Approx(base ? 1 - spec.noise_rate : spec.noise_rate));
    }
  }
}

TEST_CASE("model archive round-trips every model kind") {
  std::mt19937_64 rng(311);
  SupportSet support({LabelVector({0}, 3), LabelVector({1, 2}, 3), LabelVector({}, 3)},
                     {4, 2, 1});
  CrfModel crf(3, 5, true, support);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int l = 0; l < 3; ++l)
    for (int d = 0; d < 6; ++d) crf.unary()(l, d) = val(rng);
  for (int p = 0; p < crf.num_pairs(); ++p)
    for (int t = 0; t < 4; ++t) crf.pairwise()(p, t) = val(rng);

  LsfModel lsf;
  lsf.num_labels = 2;
  lsf.feature_dim = 5;
  for (int l = 0; l < 2; ++l) {
    lsf.marginal_models.push_back(random_binary_model(5, rng));
    LinearModel card(2, 5);
    card.weights()(1, 2) = 0.7;
    lsf.cardinality_models.push_back(card);
  }
  lsf.empty_model = random_binary_model(5, rng);

  std::vector<AnyModel> models = {random_br(3, 5, rng), random_pcc(3, 5, rng),
                                  random_cbm(2, 3, 5, rng), crf, lsf};
  std::vector<SparseInstance> probes;
  for (int i = 0; i < 5; ++i) probes.push_back(random_instance(5, rng, 0.8));

  for (const AnyModel& model : models) {
    const std::string path = temp_path("mlc_archive_" + model_kind_name(kind_of(model)));
    nlohmann::json manifest{{"note", "round trip"}, {"lambda", 0.25}};
    ArchiveStats stats = save_model(model, path, manifest);
    CHECK(stats.byte_size == std::filesystem::file_size(path));
    CHECK(stats.byte_size > 0);

    LoadedModel loaded = load_model(path);
    CHECK(kind_of(loaded.model) == kind_of(model));
    CHECK(loaded.manifest["note"] == "round trip");
    CHECK(loaded.manifest["lambda"] == 0.25);

    // identical predictions before and after
    std::visit(
        [&](const auto& original) {
          const auto& restored = std::get<std::decay_t<decltype(original)>>(loaded.model);
          if constexpr (std::is_same_v<std::decay_t<decltype(original)>, LsfModel>) {
            for (const auto& x : probes) {
              MarginalMatrix a = lsf_marginals(original, x);
              MarginalMatrix b = lsf_marginals(restored, x);
              CHECK((a.p - b.p).cwiseAbs().maxCoeff() == 0.0);
              CHECK(a.p_empty == b.p_empty);
            }
          } else {
            for (const auto& x : probes)
              for (std::uint64_t mask = 0; mask < 8; ++mask) {
                LabelVector y = LabelVector::from_mask(mask, original.num_labels());
                CHECK(original.log_joint(x, y) == restored.log_joint(x, y));
              }
          }
        },
        model);

    // saving the loaded model reproduces the file byte for byte
    const std::string path2 = path + ".again";
    save_model(loaded.model, path2, loaded.manifest);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
  }
}

TEST_CASE("archive stats recount matches an independent weight census") {
  std::mt19937_64 rng(313);
  BrModel br = random_br(4, 10, rng);
  // zero a few weights so sparsity is visible
  std::vector<LinearModel> models = br.label_models();
  models[0].weights().row(1).setZero();
  models[1].weights()(1, 3) = 0.0;
  models[1].weights()(1, 7) = 0.0;
  BrModel sparse(models);

  std::int64_t nnz = 0;
  std::set<int> touched;
  for (const auto& m : sparse.label_models())
    for (int d = 0; d < 10; ++d)
      if (m.weights()(1, d) != 0.0) {
        ++nnz;
        touched.insert(d);
      }
  ArchiveStats stats = model_stats(sparse);
  CHECK(stats.nonzero_weight_count == nnz);
  CHECK(stats.union_feature_count == static_cast<int>(touched.size()));

  const std::string path = temp_path("mlc_stats_probe");
  ArchiveStats written = save_model(sparse, path);
  CHECK(written.nonzero_weight_count == nnz);
  CHECK(written.union_feature_count == stats.union_feature_count);

  // sparser model, smaller file
  std::vector<LinearModel> dense_models;
  for (int l = 0; l < 4; ++l) {
    LinearModel m = random_binary_model(10, rng);
    dense_models.push_back(m);
  }
  const std::string dense_path = temp_path("mlc_stats_dense");
  ArchiveStats dense_stats = save_model(BrModel(dense_models), dense_path);
  CHECK(written.byte_size < dense_stats.byte_size);
  std::remove(path.c_str());
  std::remove(dense_path.c_str());
}

TEST_CASE("corrupted archives are rejected") {
  std::mt19937_64 rng(317);
  const std::string path = temp_path("mlc_corrupt");
  save_model(random_br(2, 3, rng), path);
  std::string bytes = slurp(path);
  bytes[bytes.size() / 2] ^= 0x40;
  std::ofstream(path, std::ios::binary) << bytes;
  CHECK_THROWS(load_model(path));
  CHECK_THROWS(load_model(temp_path("mlc_missing_file")));
  std::remove(path.c_str());
}
