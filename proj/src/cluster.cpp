#include "embench/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "embench/error.hpp"
#include "embench/rng.hpp"

namespace embench::cluster {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

std::vector<std::size_t> ClusterModel::populations() const {
  std::vector<std::size_t> pop(k, 0);
  for (int a : assignments) ++pop[static_cast<std::size_t>(a)];
  return pop;
}

namespace {

struct Run {
  std::vector<double> centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

std::vector<double> kmeans_plus_plus(const EmbeddingMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  const std::size_t d = x.dim();
  std::vector<double> centroids;
  centroids.reserve(k * d);
  std::vector<char> chosen(n, 0);

  auto take = [&](std::size_t i) {
    chosen[i] = 1;
    auto r = x.row(i);
    centroids.insert(centroids.end(), r.begin(), r.end());
  };

  take(static_cast<std::size_t>(rng.uniform_index(n)));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(x.row(i), std::span<const double>(centroids.data(), d));

  while (centroids.size() < k * d) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a chosen center; fall back to an unused row.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) unused.push_back(i);
      }
      pick = unused[static_cast<std::size_t>(rng.uniform_index(unused.size()))];
    }
    take(pick);
    const std::span<const double> c(centroids.data() + centroids.size() - d, d);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], squared_distance(x.row(i), c));
  }
  return centroids;
}

double assign(const EmbeddingMatrix& x, std::size_t k, const std::vector<double>& centroids,
              std::vector<int>& assignments, std::vector<double>& dist) {
  const std::size_t d = x.dim();
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double s = squared_distance(x.row(i), std::span<const double>(centroids.data() + c * d, d));
      if (s < best) {
        best = s;
        best_c = static_cast<int>(c);
      }
    }
    assignments[i] = best_c;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

// Means of assigned rows. Returns false if some cluster is empty.
bool update_means(const EmbeddingMatrix& x, std::size_t k, const std::vector<int>& assignments,
                  std::vector<double>& centroids) {
  const std::size_t d = x.dim();
  std::vector<double> sums(k * d, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assignments[i]);
    ++counts[c];
    auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += r[j];
  }
  bool all_filled = true;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      all_filled = false;
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
  }
  return all_filled;
}

double objective(const EmbeddingMatrix& x, const std::vector<double>& centroids,
                 const std::vector<int>& assignments) {
  const std::size_t d = x.dim();
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assignments[i]);
    total += squared_distance(x.row(i), std::span<const double>(centroids.data() + c * d, d));
  }
  return total;
}

// Moves the farthest non-singleton member into each empty cluster.
void reseed_empty(const EmbeddingMatrix& x, std::size_t k, std::vector<int>& assignments,
                  std::vector<double>& dist, std::vector<double>& centroids) {
  const std::size_t d = x.dim();
  std::vector<std::size_t> counts(k, 0);
  for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = x.rows();
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (counts[static_cast<std::size_t>(assignments[i])] < 2) continue;
      if (far == x.rows() || dist[i] > dist[far]) far = i;
    }
    if (far == x.rows()) throw NumericError("cannot re-seed an empty cluster");
    --counts[static_cast<std::size_t>(assignments[far])];
    assignments[far] = static_cast<int>(c);
    counts[c] = 1;
    dist[far] = 0.0;
    auto r = x.row(far);
    std::copy(r.begin(), r.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
  }
}

Run lloyd(const EmbeddingMatrix& x, std::size_t k, Rng& rng, const KMeansOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t d = x.dim();
  Run run;
  run.centroids = kmeans_plus_plus(x, k, rng);
  run.assignments.assign(n, -1);
  std::vector<double> dist(n);
  std::vector<int> previous;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const double assigned = assign(x, k, run.centroids, run.assignments, dist);
    if (iter == 0) run.history.push_back(assigned);
    if (run.assignments == previous) break;  // fixpoint: centroids already the means
    reseed_empty(x, k, run.assignments, dist, run.centroids);
    const std::vector<double> old = run.centroids;
    update_means(x, k, run.assignments, run.centroids);
    ++run.iterations;
    run.history.push_back(objective(x, run.centroids, run.assignments));
    previous = run.assignments;

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, squared_distance(std::span<const double>(old.data() + c * d, d),
                                               std::span<const double>(run.centroids.data() + c * d, d)));
    }
    if (std::sqrt(shift) < options.tol) break;
  }
  run.inertia = objective(x, run.centroids, run.assignments);
  return run;
}

}  // namespace

ClusterModel fit_kmeans(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options) {
  if (k == 0) throw ValidationError("k must be positive");
  if (k > x.rows()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the " + std::to_string(x.rows()) + " rows");
  }
  if (options.max_iter < 1) throw ValidationError("max_iter must be positive");
  if (options.tol < 0.0) throw ValidationError("tol must be nonnegative");

  Rng rng(seed);
  Run best;
  bool have_best = false;
  for (int attempt = 0; attempt < std::max(1, options.n_init); ++attempt) {
    Run run = lloyd(x, k, rng, options);
    if (!have_best || run.inertia < best.inertia) {
      best = std::move(run);
      have_best = true;
    }
  }

  ClusterModel model;
  model.k = k;
  model.dim = x.dim();
  model.centroids = std::move(best.centroids);
  model.assignments = std::move(best.assignments);
  model.inertia = best.inertia;
  model.seed = seed;
  model.iterations = best.iterations;
  model.inertia_history = std::move(best.history);
  return model;
}

double silhouette(const EmbeddingMatrix& x, std::span<const int> assignments) {
  const std::size_t n = x.rows();
  if (assignments.size() != n) throw ValidationError("assignment count does not match rows");
  int max_label = -1;
  for (int a : assignments) {
    if (a < 0) throw ValidationError("negative cluster index");
    max_label = std::max(max_label, a);
  }
  const auto k = static_cast<std::size_t>(max_label + 1);
  std::vector<std::size_t> counts(k, 0);
  for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
  const auto nonempty = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
  if (nonempty < 2) throw ValidationError("silhouette needs at least two non-empty clusters");

  std::vector<double> sums(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(assignments[i]);
    if (counts[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(assignments[j])] += std::sqrt(squared_distance(x.row(i), x.row(j)));
    }
    const double a = sums[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

KSelection select_k(const EmbeddingMatrix& x, std::size_t k_min, std::size_t k_max,
                    std::uint64_t seed, const KMeansOptions& options) {
  if (k_min > k_max) throw ValidationError("empty k range");
  if (k_min < 2 || x.rows() < 3 || k_max > x.rows() - 1) {
    throw ValidationError("k range must lie within [2, n-1] for n = " + std::to_string(x.rows()));
  }
  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    auto model = fit_kmeans(x, k, seed, options);
    const double score = silhouette(x, model.assignments);
    sel.scores.emplace_back(k, score);
    if (score > best) {
      best = score;
      sel.best_k = k;
      sel.best_model = std::move(model);
    }
  }
  return sel;
}

std::vector<std::vector<std::size_t>> nearest_rows(const ClusterModel& model, const EmbeddingMatrix& x,
                                                   std::size_t top_n) {
  if (x.dim() != model.dim) {
    throw ValidationError("embedding dimension " + std::to_string(x.dim()) +
                          " does not match cluster dimension " + std::to_string(model.dim));
  }
  const bool fitted = x.rows() == model.assignments.size();
  std::vector<std::vector<std::pair<double, std::size_t>>> members(model.k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t c = 0;
    double dist = std::numeric_limits<double>::infinity();
    if (fitted) {
      c = static_cast<std::size_t>(model.assignments[i]);
      dist = squared_distance(x.row(i), model.centroid(c));
    } else {
      for (std::size_t q = 0; q < model.k; ++q) {
        const double s = squared_distance(x.row(i), model.centroid(q));
        if (s < dist) {
          dist = s;
          c = q;
        }
      }
    }
    members[c].emplace_back(dist, i);
  }
  std::vector<std::vector<std::size_t>> out(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    auto& m = members[c];
    const std::size_t keep = std::min(top_n, m.size());
    std::partial_sort(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(keep), m.end());
    for (std::size_t r = 0; r < keep; ++r) out[c].push_back(m[r].second);
  }
  return out;
}

std::vector<std::vector<std::string>> nearest_samples(const ClusterModel& model, const EmbeddingMatrix& x,
                                                      std::size_t top_n) {
  auto rows = nearest_rows(model, x, top_n);
  std::vector<std::vector<std::string>> out(rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (auto r : rows[c]) out[c].push_back(x.id(r));
  }
  return out;
}

std::string to_json(const ClusterModel& model, const std::vector<std::string>& ids, int indent) {
  if (ids.size() != model.assignments.size()) throw ValidationError("id count does not match assignments");
  nlohmann::ordered_json j;
  j["k"] = model.k;
  j["seed"] = model.seed;
  j["inertia"] = model.inertia;
  j["iterations"] = model.iterations;
  auto& centroids = j["centroids"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < model.k; ++c) {
    auto row = model.centroid(c);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  auto& assignments = j["assignments"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < ids.size(); ++i) assignments[ids[i]] = model.assignments[i];
  return j.dump(indent);
}

}  // namespace embench::cluster
