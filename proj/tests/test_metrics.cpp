#include <doctest.h>

#include <random>

#include "mlc/metrics.hpp"

using namespace mlc;

TEST_CASE("instance f1 basics") {
  CHECK(instance_f1(LabelVector({0, 1}, 4), LabelVector({0, 1}, 4)) == 1.0);
  CHECK(instance_f1(LabelVector({0, 1}, 4), LabelVector({0, 2}, 4)) == doctest::Approx(0.5));
  CHECK(instance_f1(LabelVector({}, 4), LabelVector({}, 4)) == 1.0);
  CHECK(instance_f1(LabelVector({}, 4), LabelVector({1}, 4)) == 0.0);
  CHECK(instance_f1(LabelVector({1}, 4), LabelVector({}, 4)) == 0.0);
}

TEST_CASE("precision and recall") {
  CHECK(precision(LabelVector({0, 1, 2}, 4), LabelVector({0}, 4)) == 1.0);
  CHECK(recall(LabelVector({0, 1, 2}, 4), LabelVector({0}, 4)) == doctest::Approx(1.0 / 3));
  CHECK(precision(LabelVector({1}, 4), LabelVector({1}, 4)) == 1.0);
  CHECK(recall(LabelVector({1}, 4), LabelVector({1}, 4)) == 1.0);
  CHECK(precision(LabelVector({1}, 4), LabelVector({}, 4)) == 0.0);
  CHECK(recall(LabelVector({}, 4), LabelVector({1}, 4)) == 0.0);
}

TEST_CASE("harmonic mean identity on random nonzero pairs") {
  std::mt19937_64 rng(11);
  const int num_labels = 8;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> a, b;
    for (int l = 0; l < num_labels; ++l) {
      if (rng() % 2) a.push_back(l);
      if (rng() % 2) b.push_back(l);
    }
    if (a.empty()) a.push_back(0);
    if (b.empty()) b.push_back(1);
    LabelVector ya(a, num_labels), yb(b, num_labels);
    const double p = precision(ya, yb), r = recall(ya, yb);
    const double f = instance_f1(ya, yb);
    if (p + r > 0) {
      CHECK(f == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-12));
    } else {
      CHECK(f == 0.0);
    }
    CHECK(instance_f1(ya, yb) == instance_f1(yb, ya));
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK((f == 1.0) == (ya == yb));
  }
}

TEST_CASE("evaluate aggregates") {
  std::vector<LabelVector> truths{LabelVector({0, 1}, 4)};
  std::vector<LabelVector> preds{LabelVector({0, 2}, 4)};
  EvalReport r = evaluate(truths, preds);
  CHECK(r.mean_instance_f1 == doctest::Approx(0.5));
  CHECK(r.subset_accuracy == 0.0);
  CHECK(r.hamming_loss == doctest::Approx(0.5));
  CHECK(r.n_instances == 1);

  EvalReport perfect = evaluate(truths, truths);
  CHECK(perfect.mean_instance_f1 == 1.0);
  CHECK(perfect.subset_accuracy == 1.0);
  CHECK(perfect.hamming_loss == 0.0);

  // complement predictions flip every bit
  std::vector<LabelVector> t3{LabelVector({0}, 3)};
  std::vector<LabelVector> p3{LabelVector({1, 2}, 3)};
  CHECK(evaluate(t3, p3).hamming_loss == doctest::Approx(1.0));

  CHECK_THROWS_AS(evaluate(truths, {}), std::invalid_argument);
}
