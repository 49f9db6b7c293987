#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "embench/cluster.hpp"
#include "embench/error.hpp"
#include "support/support.hpp"

using namespace embench;
using namespace embench::cluster;

namespace {

EmbeddingMatrix line_fixture() {
  return EmbeddingMatrix::from_rows({"p0", "p1", "p2", "p3"}, {{0.0}, {0.1}, {10.0}, {10.1}});
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Direct transcription of the per-point definition.
double silhouette_oracle(const EmbeddingMatrix& x, const std::vector<int>& labels) {
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<int> count(k, 0);
    for (std::size_t j = 0; j < x.rows(); ++j) {
      if (j == i) continue;
      sum[labels[j]] += dist(x.row(i), x.row(j));
      ++count[labels[j]];
    }
    if (count[labels[i]] == 0) continue;  // singleton
    const double a = sum[labels[i]] / count[labels[i]];
    double b = INFINITY;
    for (int c = 0; c < k; ++c) {
      if (c != labels[i] && count[c] > 0) b = std::min(b, sum[c] / count[c]);
    }
    const double m = std::max(a, b);
    total += m == 0.0 ? 0.0 : (b - a) / m;
  }
  return total / static_cast<double>(x.rows());
}

// Partition equality up to relabeling.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

}  // namespace

TEST(KMeans, LineFixtureMatchesExhaustivePartitions) {
  const auto x = line_fixture();
  // Best of all 2-partitions by direct enumeration.
  double best = INFINITY;
  std::vector<double> best_centroids;
  for (int mask = 1; mask < 15; ++mask) {
    double s[2] = {0, 0};
    int c[2] = {0, 0};
    for (int i = 0; i < 4; ++i) {
      s[(mask >> i) & 1] += x.row(i)[0];
      ++c[(mask >> i) & 1];
    }
    const double m[2] = {s[0] / c[0], s[1] / c[1]};
    double inertia = 0;
    for (int i = 0; i < 4; ++i) inertia += std::pow(x.row(i)[0] - m[(mask >> i) & 1], 2);
    if (inertia < best) {
      best = inertia;
      best_centroids = {std::min(m[0], m[1]), std::max(m[0], m[1])};
    }
  }
  EXPECT_NEAR(best, 0.01, 1e-15);
  const auto model = fit_kmeans(x, 2, 0);
  std::vector<double> got{model.centroids[0], model.centroids[1]};
  std::sort(got.begin(), got.end());
  EXPECT_NEAR(got[0], 0.05, 1e-15);
  EXPECT_NEAR(got[1], 10.05, 1e-15);
  EXPECT_NEAR(model.inertia, best, 1e-15);
  EXPECT_NEAR(silhouette(x, model.assignments), 0.990, 0.001);
  EXPECT_NEAR(silhouette(x, model.assignments), silhouette_oracle(x, model.assignments), 1e-12);
}

TEST(KMeans, DegenerateK) {
  const auto x = embench::testing::random_matrix(6, 3, 4);
  const auto all = fit_kmeans(x, 6, 1);
  EXPECT_NEAR(all.inertia, 0.0, 1e-24);
  const auto one = fit_kmeans(x, 1, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < 6; ++i) mean += x.row(i)[j] / 6.0;
    EXPECT_NEAR(one.centroids[j], mean, 1e-12);
  }
  EXPECT_THROW(fit_kmeans(x, 7, 0), ValidationError);
  EXPECT_THROW(fit_kmeans(x, 0, 0), ValidationError);
}

TEST(KMeans, LloydMonotoneAndCentroidsAreMeans) {
  const auto blobs = embench::testing::make_blobs({{0, 0}, {3, 0}, {0, 3}, {3, 3}}, 40, 1.2, 10);
  const auto model = fit_kmeans(blobs.x, 4, 3);
  ASSERT_FALSE(model.inertia_history.empty());
  for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
    EXPECT_LE(model.inertia_history[i], model.inertia_history[i - 1] + 1e-9);
  }
  for (std::size_t c = 0; c < model.k; ++c) {
    double sx = 0, sy = 0;
    int n = 0;
    for (std::size_t i = 0; i < blobs.x.rows(); ++i) {
      if (model.assignments[i] != static_cast<int>(c)) continue;
      sx += blobs.x.row(i)[0];
      sy += blobs.x.row(i)[1];
      ++n;
    }
    ASSERT_GT(n, 0);
    EXPECT_NEAR(model.centroid(c)[0], sx / n, 1e-4);
    EXPECT_NEAR(model.centroid(c)[1], sy / n, 1e-4);
  }
  double inertia = 0;
  for (std::size_t i = 0; i < blobs.x.rows(); ++i) {
    const double d = dist(blobs.x.row(i), model.centroid(model.assignments[i]));
    inertia += d * d;
  }
  EXPECT_NEAR(model.inertia, inertia, 1e-9 * inertia);
  EXPECT_EQ(fit_kmeans(blobs.x, 4, 3).assignments, model.assignments);
}

TEST(KMeans, EmptyClusterIsReseeded) {
  // Duplicate points leave k-means++ with fewer distinct seeds than k.
  const auto x = EmbeddingMatrix::from_rows({"a", "b", "c", "d", "e"}, {{0}, {0}, {0}, {0}, {5}});
  const auto model = fit_kmeans(x, 3, 0, {300, 1e-6, 1});
  const auto pops = model.populations();
  EXPECT_EQ(std::accumulate(pops.begin(), pops.end(), std::size_t{0}), 5u);
  for (int a : model.assignments) EXPECT_LT(a, 3);
}

TEST(KMeans, RowOrderOnlyRelabels) {
  const auto blobs = embench::testing::make_blobs({{0, 0}, {8, 0}, {0, 8}}, 30, 1.0, 12);
  std::vector<std::size_t> perm(blobs.x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 gen(2);
  std::shuffle(perm.begin(), perm.end(), gen);
  const auto shuffled = blobs.x.select(perm);
  const auto m1 = fit_kmeans(sorted_by_id(blobs.x), 3, 7);
  const auto m2 = fit_kmeans(sorted_by_id(shuffled), 3, 7);
  EXPECT_TRUE(same_partition(m1.assignments, m2.assignments));
}

TEST(Silhouette, Conventions) {
  const auto same = EmbeddingMatrix::from_rows({"a", "b", "c", "d"}, {{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  const std::vector<int> split{0, 1, 0, 1};
  EXPECT_LE(silhouette(same, split), 0.0);
  const auto x = embench::testing::random_matrix(5, 2, 3);
  const std::vector<int> singletons{0, 1, 2, 3, 4};
  EXPECT_EQ(silhouette(x, singletons), 0.0);
  const std::vector<int> one{0, 0, 0, 0, 0};
  EXPECT_THROW(silhouette(x, one), ValidationError);
}

TEST(Silhouette, MatchesOracleOnRandomLabels) {
  std::mt19937 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = embench::testing::random_matrix(25, 3, 100 + trial);
    std::vector<int> labels(25);
    for (auto& l : labels) l = static_cast<int>(gen() % 4);
    labels[0] = 0, labels[1] = 1, labels[2] = 2, labels[3] = 3;
    EXPECT_NEAR(silhouette(x, labels), silhouette_oracle(x, labels), 1e-12);
  }
}

TEST(SelectK, ThreeBlobs) {
  const auto blobs = embench::testing::make_blobs({{0, 0}, {20, 0}, {10, 17.4}}, 100, 1.0, 5);
  const auto sel = select_k(blobs.x, 2, 6, 0);
  EXPECT_EQ(sel.best_k, 3u);
  ASSERT_EQ(sel.scores.size(), 5u);
  for (const auto& [k, s] : sel.scores) EXPECT_LE(s, sel.scores[1].second);
  EXPECT_GT(sel.scores[1].second, 0.8);
  EXPECT_TRUE(same_partition(sel.best_model.assignments, blobs.labels));
}

TEST(SelectK, SingleValueAndBadRanges) {
  const auto x = embench::testing::random_matrix(10, 2, 1);
  const auto sel = select_k(x, 4, 4, 0);
  EXPECT_EQ(sel.best_k, 4u);
  ASSERT_EQ(sel.scores.size(), 1u);
  EXPECT_THROW(select_k(x, 5, 4, 0), ValidationError);
  EXPECT_THROW(select_k(x, 1, 4, 0), ValidationError);
  EXPECT_THROW(select_k(x, 2, 10, 0), ValidationError);
}

TEST(NearestSamples, MatchesFullSort) {
  const auto x = embench::testing::random_matrix(50, 4, 31);
  const auto model = fit_kmeans(x, 5, 2);
  for (std::size_t top : {1u, 3u, 100u}) {
    const auto got = nearest_rows(model, x, top);
    ASSERT_EQ(got.size(), 5u);
    for (std::size_t c = 0; c < 5; ++c) {
      std::vector<std::pair<double, std::size_t>> members;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        if (model.assignments[i] == static_cast<int>(c)) members.emplace_back(dist(x.row(i), model.centroid(c)), i);
      }
      std::sort(members.begin(), members.end());
      std::vector<std::size_t> expected;
      for (std::size_t r = 0; r < std::min(top, members.size()); ++r) expected.push_back(members[r].second);
      EXPECT_EQ(got[c], expected);
    }
  }
  const auto ids = nearest_samples(model, x, 1);
  EXPECT_EQ(ids[0][0], x.id(nearest_rows(model, x, 1)[0][0]));
  EXPECT_THROW(nearest_rows(model, embench::testing::random_matrix(5, 3, 0), 1), ValidationError);
}

TEST(ClusterModel, JsonFields) {
  const auto x = line_fixture();
  const auto model = fit_kmeans(x, 2, 9);
  const auto j = nlohmann::json::parse(to_json(model, x.ids()));
  EXPECT_EQ(j["k"], 2);
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["centroids"].size(), 2u);
  EXPECT_EQ(j["assignments"]["p3"], model.assignments[3]);
  EXPECT_NEAR(j["inertia"].get<double>(), 0.01, 1e-12);
}
