#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embench/ingest.hpp"

namespace embench::cluster {

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;   // k x dim, row-major
  std::vector<int> assignments;    // per fitted row, in [0, k)
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  // Objective after initialization and after each Lloyd iteration of the
  // winning restart.
  std::vector<double> inertia_history;

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
  std::vector<std::size_t> populations() const;
};

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-6;  // stop once no centroid moves farther than this
  int n_init = 10;
};

// Lloyd's algorithm from k-means++ seeds, best inertia over n_init restarts.
// An empty cluster is re-seeded with the point farthest from its centroid.
ClusterModel fit_kmeans(const EmbeddingMatrix& x, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options = {});

// Mean silhouette with Euclidean distances; singleton-cluster points score 0.
double silhouette(const EmbeddingMatrix& x, std::span<const int> assignments);

struct KSelection {
  std::size_t best_k = 0;
  std::vector<std::pair<std::size_t, double>> scores;  // (k, silhouette)
  ClusterModel best_model;
};

// Fits every k in [k_min, k_max] and keeps the highest silhouette, preferring
// the smaller k on ties.
KSelection select_k(const EmbeddingMatrix& x, std::size_t k_min, std::size_t k_max,
                    std::uint64_t seed, const KMeansOptions& options = {});

// For each cluster, up to top_n member row indices ordered by increasing
// distance to the centroid. Membership comes from the model when x has the
// fitted row count, otherwise from the nearest centroid.
std::vector<std::vector<std::size_t>> nearest_rows(const ClusterModel& model,
                                                   const EmbeddingMatrix& x, std::size_t top_n);

// nearest_rows mapped to row ids.
std::vector<std::vector<std::string>> nearest_samples(const ClusterModel& model,
                                                      const EmbeddingMatrix& x, std::size_t top_n);

double squared_distance(std::span<const double> a, std::span<const double> b);

// {"k","seed","inertia","centroids":[[...]],"assignments":{id: cluster}}
std::string to_json(const ClusterModel& model, const std::vector<std::string>& ids, int indent = 2);

}  // namespace embench::cluster
