#pragma once

#include <vector>

#include "mlc/core.hpp"

namespace mlc {

struct EvalReport {
  double mean_instance_f1 = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double subset_accuracy = 0.0;
  double hamming_loss = 0.0;
  int n_instances = 0;
};

/// Instance F1, 2|y & y'| / (|y| + |y'|). Both sides empty -> 1, exactly one
/// side empty -> 0.
double instance_f1(const LabelVector& truth, const LabelVector& prediction);

/// |y & y'| / |y'|; empty prediction -> 1 if the truth is also empty, else 0.
double precision(const LabelVector& truth, const LabelVector& prediction);

/// |y & y'| / |y|; empty truth -> 1 if the prediction is also empty, else 0.
double recall(const LabelVector& truth, const LabelVector& prediction);

EvalReport evaluate(const std::vector<LabelVector>& truths,
                    const std::vector<LabelVector>& predictions);

}  // namespace mlc
