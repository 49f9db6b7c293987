#include "embench/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "embench/error.hpp"
#include "embench/rng.hpp"

namespace embench::probe {

ProbeModel ProbeModel::zeros(std::size_t dim, std::vector<int> class_labels) {
  ProbeModel m;
  m.dim = dim;
  m.class_labels = std::move(class_labels);
  m.weights.assign(dim * m.class_labels.size(), 0.0);
  m.bias.assign(m.class_labels.size(), 0.0);
  return m;
}

namespace {

void check_dim(const ProbeModel& model, const EmbeddingMatrix& x) {
  if (!x.empty() && x.dim() != model.dim) {
    throw ValidationError("embedding dimension " + std::to_string(x.dim()) +
                          " does not match probe dimension " + std::to_string(model.dim));
  }
}

// Softmax of W^T x + b into `out` (size C).
void softmax_row(const ProbeModel& model, std::span<const double> x, std::span<double> out) {
  const std::size_t c = model.num_classes();
  for (std::size_t k = 0; k < c; ++k) out[k] = model.bias[k];
  for (std::size_t j = 0; j < model.dim; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* w = model.weights.data() + j * c;
    for (std::size_t k = 0; k < c; ++k) out[k] += xj * w[k];
  }
  const double peak = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (auto& v : out) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto& v : out) v /= total;
}

std::vector<std::size_t> class_indices(const std::vector<int>& class_labels,
                                       std::span<const int> labels) {
  std::vector<std::size_t> index;
  index.reserve(labels.size());
  for (int label : labels) {
    auto it = std::lower_bound(class_labels.begin(), class_labels.end(), label);
    if (it == class_labels.end() || *it != label) {
      throw ValidationError("label " + std::to_string(label) + " is not a probe class");
    }
    index.push_back(static_cast<std::size_t>(it - class_labels.begin()));
  }
  return index;
}

}  // namespace

std::vector<double> predict_proba(const ProbeModel& model, const EmbeddingMatrix& x) {
  check_dim(model, x);
  const std::size_t c = model.num_classes();
  std::vector<double> proba(x.rows() * c);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    softmax_row(model, x.row(i), std::span<double>(proba.data() + i * c, c));
  }
  return proba;
}

LossGradient loss_and_gradient(const ProbeModel& model, const EmbeddingMatrix& x,
                               std::span<const std::size_t> class_index, double l2,
                               std::span<const std::size_t> rows) {
  check_dim(model, x);
  const std::size_t c = model.num_classes();
  const std::size_t m = rows.empty() ? x.rows() : rows.size();
  LossGradient out;
  out.weights.assign(model.weights.size(), 0.0);
  out.bias.assign(c, 0.0);
  if (m == 0) return out;

  std::vector<double> p(c);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t i = rows.empty() ? r : rows[r];
    const auto xi = x.row(i);
    softmax_row(model, xi, p);
    const std::size_t y = class_index[i];
    total -= std::log(std::max(p[y], kProbabilityFloor));
    p[y] -= 1.0;
    for (std::size_t k = 0; k < c; ++k) out.bias[k] += p[k];
    for (std::size_t j = 0; j < model.dim; ++j) {
      const double xj = xi[j];
      if (xj == 0.0) continue;
      double* g = out.weights.data() + j * c;
      for (std::size_t k = 0; k < c; ++k) g[k] += xj * p[k];
    }
  }
  const double scale = 1.0 / static_cast<double>(m);
  out.loss = total * scale;
  for (auto& g : out.bias) g *= scale;
  double penalty = 0.0;
  for (std::size_t q = 0; q < out.weights.size(); ++q) {
    out.weights[q] = out.weights[q] * scale + l2 * model.weights[q];
    penalty += model.weights[q] * model.weights[q];
  }
  out.loss += 0.5 * l2 * penalty;
  return out;
}

ProbeFit fit_probe(const EmbeddingMatrix& x, std::span<const int> labels, const ProbeConfig& config) {
  if (labels.size() != x.rows()) {
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " does not match embedding rows " + std::to_string(x.rows()));
  }
  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw ValidationError("probe training needs at least two classes");
  if (config.epochs < 0) throw ValidationError("epochs must be nonnegative");
  if (config.batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(config.l2 >= 0.0)) throw ValidationError("l2 must be nonnegative");

  ProbeFit fit;
  fit.model = ProbeModel::zeros(x.dim(), std::vector<int>(distinct.begin(), distinct.end()));
  const auto class_index = class_indices(fit.model.class_labels, labels);

  double lr = config.learning_rate;
  double current = loss_and_gradient(fit.model, x, class_index, config.l2).loss;
  fit.epoch_loss.push_back(current);

  Rng rng(config.seed);
  const std::size_t n = x.rows();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const ProbeModel snapshot = fit.model;
    const auto order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      auto grad = loss_and_gradient(fit.model, x, class_index, config.l2,
                                    std::span<const std::size_t>(order).subspan(start, count));
      for (std::size_t q = 0; q < fit.model.weights.size(); ++q) {
        fit.model.weights[q] -= lr * grad.weights[q];
      }
      for (std::size_t k = 0; k < fit.model.bias.size(); ++k) fit.model.bias[k] -= lr * grad.bias[k];
    }
    const double next = loss_and_gradient(fit.model, x, class_index, config.l2).loss;
    if (!std::isfinite(next)) throw NumericError("probe training diverged");
    if (next > current) {
      fit.model = snapshot;
      lr *= 0.5;
    } else {
      current = next;
    }
    fit.epoch_loss.push_back(current);
  }
  fit.final_learning_rate = lr;
  return fit;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  for (int label : labels) {
    if (label != 0 && label != 1) throw ValidationError("ROC-AUC labels must be 0 or 1");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the Mann-Whitney U of the positives, accumulated exactly with
  // doubled mid-ranks.
  std::uint64_t n_pos = 0;
  std::uint64_t doubled_rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t doubled_mid_rank = i + 1 + j;  // 2 * (i+1 + j) / 2
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        ++n_pos;
        doubled_rank_sum += doubled_mid_rank;
      }
    }
    i = j;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("ROC-AUC needs both positive and negative examples");
  const std::uint64_t doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc_macro_ovr(std::span<const double> proba, std::size_t num_classes,
                         std::span<const std::size_t> class_index) {
  const std::size_t n = class_index.size();
  if (proba.size() != n * num_classes) throw ValidationError("probability matrix has the wrong shape");
  std::vector<double> scores(n);
  std::vector<int> positive(n);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = proba[i * num_classes + c];
      positive[i] = class_index[i] == c ? 1 : 0;
      pos += static_cast<std::size_t>(positive[i]);
    }
    if (pos == 0 || pos == n) continue;
    total += roc_auc(scores, positive);
    ++used;
  }
  if (used == 0) throw ValidationError("ROC-AUC needs at least two classes in the evaluation set");
  return total / static_cast<double>(used);
}

EvalReport evaluate(const ProbeModel& model, const EmbeddingMatrix& x, std::span<const int> labels) {
  if (x.empty()) throw ValidationError("evaluation set is empty");
  if (labels.size() != x.rows()) throw ValidationError("label count does not match embedding rows");
  const auto class_index = class_indices(model.class_labels, labels);
  const auto proba = predict_proba(model, x);
  const std::size_t c = model.num_classes();

  EvalReport report;
  report.n_examples = x.rows();
  report.class_labels = model.class_labels;
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* row = proba.data() + i * c;
    loss -= std::log(std::max(row[class_index[i]], kProbabilityFloor));
    // max_element returns the first maximum: ties go to the lowest class.
    const auto predicted = static_cast<std::size_t>(std::max_element(row, row + c) - row);
    correct += predicted == class_index[i] ? 1 : 0;
  }
  report.cross_entropy = loss / static_cast<double>(x.rows());
  report.accuracy = static_cast<double>(correct) / static_cast<double>(x.rows());

  if (c == 2) {
    std::vector<double> scores(x.rows());
    std::vector<int> positive(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      scores[i] = proba[i * 2 + 1];
      positive[i] = class_index[i] == 1 ? 1 : 0;
    }
    report.auc = roc_auc(scores, positive);
  } else {
    report.auc = roc_auc_macro_ovr(proba, c, class_index);
  }
  return report;
}

std::string to_json(const EvalReport& report, int indent) {
  nlohmann::ordered_json j;
  j["cross_entropy"] = report.cross_entropy;
  j["accuracy"] = report.accuracy;
  j["auc"] = report.auc;
  j["n_examples"] = report.n_examples;
  j["class_labels"] = report.class_labels;
  return j.dump(indent);
}

}  // namespace embench::probe
