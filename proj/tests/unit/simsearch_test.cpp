#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "embench/error.hpp"
#include "embench/simsearch.hpp"
#include "support/support.hpp"

using namespace embench;
using namespace embench::simsearch;

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(Synonyms, HandCosines) {
  WordVectorTable table(EmbeddingMatrix::from_rows({"a", "b", "c"}, {{1, 0}, {1, 0}, {0, 1}}));
  const auto r = top_k_similar("a", table, 2);
  ASSERT_EQ(r.neighbors.size(), 2u);
  EXPECT_EQ(r.neighbors[0].first, "b");
  EXPECT_NEAR(r.neighbors[0].second, 1.0, 1e-15);
  EXPECT_EQ(r.neighbors[1].first, "c");
  EXPECT_NEAR(r.neighbors[1].second, 0.0, 1e-15);
  EXPECT_EQ(top_k_similar("a", table, 10).neighbors.size(), 2u);
}

TEST(Synonyms, Errors) {
  WordVectorTable table(EmbeddingMatrix::from_rows({"a", "b"}, {{1, 0}, {0, 1}}));
  EXPECT_THROW(top_k_similar("zzz", table, 2), NotFoundError);
  WordVectorTable with_zero(EmbeddingMatrix::from_rows({"a", "nil"}, {{1, 0}, {0, 0}}));
  try {
    top_k_similar("a", with_zero, 1);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("nil"), std::string::npos);
  }
  EXPECT_THROW(top_k_similar("nil", with_zero, 1), NumericError);
}

TEST(Synonyms, MatchesBruteForceScan) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = embench::testing::random_matrix(30, 6, seed);
    WordVectorTable table(m);
    const std::size_t q = seed % 30;
    std::vector<std::pair<double, std::string>> all;
    for (std::size_t i = 0; i < 30; ++i) {
      if (i != q) all.emplace_back(-cosine(m.row(q), m.row(i)), m.id(i));
    }
    std::sort(all.begin(), all.end());
    const auto r = top_k_similar(m.id(q), table, 8);
    ASSERT_EQ(r.neighbors.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_EQ(r.neighbors[i].first, all[i].second);
      EXPECT_NEAR(r.neighbors[i].second, -all[i].first, 1e-12);
    }
  }
}

TEST(Synonyms, TiesBreakLexicographically) {
  WordVectorTable table(EmbeddingMatrix::from_rows({"q", "zeta", "alpha", "mid"}, {{1, 0}, {2, 0}, {3, 0}, {0, 1}}));
  const auto r = top_k_similar("q", table, 3);
  EXPECT_EQ(r.neighbors[0].first, "alpha");
  EXPECT_EQ(r.neighbors[1].first, "zeta");
  EXPECT_EQ(r.neighbors[2].first, "mid");
}

TEST(Synonyms, QueryVectorAndSymmetry) {
  const auto m = embench::testing::random_matrix(12, 4, 3);
  WordVectorTable table(m);
  const auto by_word = top_k_similar(m.id(5), table, 4);
  const auto by_vector = top_k_similar(m.row(5), table, 4, m.id(5));
  EXPECT_EQ(by_word.neighbors, by_vector.neighbors);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) EXPECT_NEAR(table.cosine(i, j), table.cosine(j, i), 1e-12);
}

TEST(Synonyms, JsonExport) {
  WordVectorTable table(EmbeddingMatrix::from_rows({"a", "b"}, {{1, 0}, {1, 1}}));
  const auto j = nlohmann::json::parse(to_json(top_k_similar("a", table, 1)));
  EXPECT_EQ(j["query"], "a");
  EXPECT_EQ(j["neighbors"][0]["word"], "b");
}

TEST(Distribution, DegenerateTables) {
  WordVectorTable same(EmbeddingMatrix::from_rows({"a", "b", "c"}, {{1, 2}, {1, 2}, {1, 2}}));
  const auto s = similarity_distribution(same, 1000, 0);
  EXPECT_NEAR(s.mean, 1.0, 1e-12);
  EXPECT_NEAR(s.sd, 0.0, 1e-7);
  EXPECT_EQ(s.pairs, 3u);
  WordVectorTable basis(EmbeddingMatrix::from_rows({"x", "y", "z"}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  const auto o = similarity_distribution(basis, 1000, 0);
  EXPECT_NEAR(o.mean, 0.0, 1e-15);
  ASSERT_EQ(o.histogram.size(), kHistogramBins);
  EXPECT_EQ(o.histogram[20], 3u);
}

TEST(Distribution, AllPairsMatchExhaustive) {
  const auto m = embench::testing::random_matrix(10, 5, 77);
  WordVectorTable table(m);
  const auto s = similarity_distribution(table, 45, 1);
  std::vector<double> c;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j) c.push_back(cosine(m.row(i), m.row(j)));
  double mean = 0;
  for (double v : c) mean += v / c.size();
  double var = 0;
  for (double v : c) var += (v - mean) * (v - mean) / c.size();
  EXPECT_EQ(s.pairs, 45u);
  EXPECT_NEAR(s.mean, mean, 1e-12);
  EXPECT_NEAR(s.sd, std::sqrt(var), 1e-12);
}

TEST(Distribution, SampledPairsSeeded) {
  WordVectorTable table(embench::testing::random_matrix(50, 4, 2));
  const auto a = similarity_distribution(table, 100, 9);
  const auto b = similarity_distribution(table, 100, 9);
  EXPECT_EQ(a.pairs, 100u);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.histogram, b.histogram);
  std::size_t total = 0;
  for (auto h : a.histogram) total += h;
  EXPECT_EQ(total, 100u);
}
