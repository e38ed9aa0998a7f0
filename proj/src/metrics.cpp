#include "mlc/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace mlc {

namespace {

int intersection_size(const LabelVector& a, const LabelVector& b) {
  int count = 0;
  auto it = b.labels().begin();
  for (int l : a.labels()) {
    it = std::lower_bound(it, b.labels().end(), l);
    if (it == b.labels().end()) break;
    if (*it == l) ++count;
  }
  return count;
}

void check_spaces(const LabelVector& a, const LabelVector& b) {
  if (a.label_space_size() != b.label_space_size())
    throw std::invalid_argument("metrics: label space mismatch");
}

}  // namespace

double instance_f1(const LabelVector& truth, const LabelVector& prediction) {
  check_spaces(truth, prediction);
  const int denom = truth.cardinality() + prediction.cardinality();
  if (denom == 0) return 1.0;
  return 2.0 * intersection_size(truth, prediction) / denom;
}

double precision(const LabelVector& truth, const LabelVector& prediction) {
  check_spaces(truth, prediction);
  if (prediction.cardinality() == 0) return truth.cardinality() == 0 ? 1.0 : 0.0;
  return static_cast<double>(intersection_size(truth, prediction)) / prediction.cardinality();
}

double recall(const LabelVector& truth, const LabelVector& prediction) {
  check_spaces(truth, prediction);
  if (truth.cardinality() == 0) return prediction.cardinality() == 0 ? 1.0 : 0.0;
  return static_cast<double>(intersection_size(truth, prediction)) / truth.cardinality();
}

EvalReport evaluate(const std::vector<LabelVector>& truths,
                    const std::vector<LabelVector>& predictions) {
  if (truths.size() != predictions.size() || truths.empty())
    throw std::invalid_argument("evaluate: length mismatch or empty input");
  EvalReport report;
  report.n_instances = static_cast<int>(truths.size());
  for (size_t i = 0; i < truths.size(); ++i) {
    const LabelVector& y = truths[i];
    const LabelVector& p = predictions[i];
    report.mean_instance_f1 += instance_f1(y, p);
    report.mean_precision += precision(y, p);
    report.mean_recall += recall(y, p);
    report.subset_accuracy += y == p ? 1.0 : 0.0;
    const int disagree =
        y.cardinality() + p.cardinality() - 2 * intersection_size(y, p);
    report.hamming_loss += static_cast<double>(disagree) / y.label_space_size();
  }
  const double n = report.n_instances;
  report.mean_instance_f1 /= n;
  report.mean_precision /= n;
  report.mean_recall /= n;
  report.subset_accuracy /= n;
  report.hamming_loss /= n;
  return report;
}

}  // namespace mlc
