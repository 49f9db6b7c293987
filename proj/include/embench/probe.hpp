#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embench/ingest.hpp"

namespace embench::probe {

// Affine layer + softmax over frozen d-dimensional embeddings.
struct ProbeModel {
  std::size_t dim = 0;
  std::vector<int> class_labels;  // ascending; index = output column
  std::vector<double> weights;    // dim x C, row-major
  std::vector<double> bias;       // C

  std::size_t num_classes() const noexcept { return class_labels.size(); }
  double weight(std::size_t feature, std::size_t cls) const {
    return weights[feature * num_classes() + cls];
  }

  static ProbeModel zeros(std::size_t dim, std::vector<int> class_labels);
};

struct ProbeConfig {
  int epochs = 50;
  double learning_rate = 0.1;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  double l2 = 0.0;
};

struct ProbeFit {
  ProbeModel model;
  // Full training-set objective after each accepted epoch; index 0 is the
  // initialization.
  std::vector<double> epoch_loss;
  double final_learning_rate = 0.0;
};

// Mini-batch gradient descent on mean cross-entropy (+ l2/2 * |W|^2). An
// epoch that raises the training objective is rolled back and the learning
// rate halved, so epoch_loss never increases. Weights start at zero.
ProbeFit fit_probe(const EmbeddingMatrix& x, std::span<const int> labels,
                   const ProbeConfig& config = {});

inline ProbeModel train_probe(const EmbeddingMatrix& x, std::span<const int> labels,
                              const ProbeConfig& config = {}) {
  return fit_probe(x, labels, config).model;
}

// n x C row-stochastic matrix, row-major.
std::vector<double> predict_proba(const ProbeModel& model, const EmbeddingMatrix& x);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> weights;  // same layout as ProbeModel::weights
  std::vector<double> bias;
};

// Analytic mean cross-entropy (+ l2 term) and its gradient over the rows in
// `rows` (all rows when empty). `class_index[i]` is the column of row i.
LossGradient loss_and_gradient(const ProbeModel& model, const EmbeddingMatrix& x,
                               std::span<const std::size_t> class_index, double l2 = 0.0,
                               std::span<const std::size_t> rows = {});

inline constexpr double kProbabilityFloor = 1e-12;

struct EvalReport {
  double cross_entropy = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t n_examples = 0;
  std::vector<int> class_labels;
};

EvalReport evaluate(const ProbeModel& model, const EmbeddingMatrix& x, std::span<const int> labels);

// Probability that a random positive (label 1) outscores a random negative
// (label 0), ties counting one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Unweighted mean of one-vs-rest AUCs over the classes that have both
// positives and negatives among `class_index`. `proba` is n x C.
double roc_auc_macro_ovr(std::span<const double> proba, std::size_t num_classes,
                         std::span<const std::size_t> class_index);

std::string to_json(const EvalReport& report, int indent = 2);

}  // namespace embench::probe
