#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "embench/error.hpp"
#include "embench/rng.hpp"

using namespace embench;

TEST(Rng, EngineMatchesReferenceSequence) {
  // The 10000th output of mt19937_64 seeded with 5489 is fixed by the
  // standard.
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, UniformIndexInRangeAndCoversAll) {
  Rng rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto r = rng.uniform_index(7);
    ASSERT_LT(r, 7u);
    ++hits[r];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Rng, ShuffleIsSeededPermutation) {
  std::vector<int> a(20), b(20);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  Rng r1(9), r2(9);
  r1.shuffle(a);
  r2.shuffle(b);
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(20);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(sorted, expected);
  EXPECT_NE(a, expected);
}

TEST(Rng, NormalMoments) {
  Rng rng(1);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Fnv1a, ReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Errors, ExitCodes) {
  EXPECT_EQ(exit_code_for(ValidationError("x").category()), 2);
  EXPECT_EQ(exit_code_for(ConflictError("x").category()), 2);
  EXPECT_EQ(exit_code_for(NumericError("x").category()), 3);
  EXPECT_EQ(exit_code_for(TransportError("x", 3).category()), 4);
}
