#include <cmath>

#include <gtest/gtest.h>
#include <json.hpp>

#include "embench/error.hpp"
#include "embench/stats.hpp"
#include "support/support.hpp"

using namespace embench;
using namespace embench::stats;

namespace {

PairedSample sample_of(std::vector<double> a, std::vector<double> b) {
  PairedSample s;
  s.label_a = "A";
  s.label_b = "B";
  s.a = std::move(a);
  s.b = std::move(b);
  return s;
}

}  // namespace

TEST(StudentT, MatchesIntegrationOracle) {
  EXPECT_NEAR(embench::testing::t_two_sided_by_integration(2.0, 5.0), 0.1019, 1e-4);
  for (double df : {2.0, 5.0, 12.0, 81.0}) {
    for (double t : {0.3, 1.0, 2.0, 3.5}) {
      EXPECT_NEAR(student_t_two_sided_p(t, df), embench::testing::t_two_sided_by_integration(t, df), 1e-9)
          << "df " << df << " t " << t;
    }
  }
  const double tiny = student_t_two_sided_p(21.898, 81.0);
  EXPECT_LT(tiny, 1e-30);
  EXPECT_NEAR(tiny / embench::testing::t_two_sided_by_integration(21.898, 81.0), 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(student_t_two_sided_p(-2.0, 5.0), student_t_two_sided_p(2.0, 5.0));
}

TEST(StudentT, QuantileInvertsTail) {
  for (double df : {3.0, 10.0, 81.0}) {
    const double q = student_t_upper_quantile(0.025, df);
    EXPECT_NEAR(student_t_two_sided_p(q, df), 0.05, 1e-12);
  }
  EXPECT_NEAR(student_t_upper_quantile(0.025, 81.0), 1.98969, 1e-5);
}

TEST(PairedTTest, ReferenceConstruction) {
  const auto f = embench::testing::paired_reference_fixture();
  const auto s = paired_ttest(sample_of(f.a, f.b));
  EXPECT_EQ(s.n, 82u);
  EXPECT_EQ(s.df, 81.0);
  EXPECT_NEAR(s.mean_diff, 1.25201, 1e-12);
  EXPECT_NEAR(s.sd_diff, 0.51773, 1e-12);
  EXPECT_NEAR(s.se_diff, 0.05717, 1e-5);
  EXPECT_NEAR(s.t, 21.898, 1e-3);
  EXPECT_NEAR(s.ci_lower, 1.13825, 1e-4);
  EXPECT_NEAR(s.ci_upper, 1.36577, 1e-4);
  EXPECT_LT(s.p_two_sided, 0.0005);
  EXPECT_NEAR(s.cohens_d, 2.418, 1e-3);
  EXPECT_NEAR(s.mean_b, 2.5239, 1e-12);
  EXPECT_NEAR(s.sd_b, 0.61724, 1e-12);
}

TEST(PairedTTest, ClosedFormInvariants) {
  const auto s = paired_ttest(sample_of({3, 4, 5, 6.4}, {1, 2, 3, 4}));
  // d = {2, 2, 2, 2.4}: mean 2.1, sd = sqrt(0.12 / 3) = 0.2.
  EXPECT_NEAR(s.mean_diff, 2.1, 1e-12);
  EXPECT_NEAR(s.sd_diff, 0.2, 1e-12);
  EXPECT_NEAR(s.se_diff, s.sd_diff / 2.0, 1e-15);
  EXPECT_NEAR(s.t, s.mean_diff / s.se_diff, 1e-12);
  EXPECT_NEAR(s.ci_upper - s.ci_lower, 2 * student_t_upper_quantile(0.025, 3) * s.se_diff, 1e-9);
  EXPECT_LT(s.ci_lower, s.mean_diff);
  EXPECT_GT(s.ci_upper, s.mean_diff);
}

TEST(PairedTTest, ZeroVarianceAndBadShapes) {
  EXPECT_THROW(paired_ttest(sample_of({3, 4, 5, 6}, {1, 2, 3, 4})), NumericError);
  EXPECT_THROW(paired_ttest(sample_of({1}, {2})), ValidationError);
  EXPECT_THROW(paired_ttest(sample_of({1, 2}, {2})), ValidationError);
}

TEST(PairedTTest, ShiftAndSwap) {
  const auto base = sample_of({3.1, 4.7, 5.2, 2.0, 6.6}, {1.0, 2.5, 3.9, 2.2, 4.0});
  const auto s = paired_ttest(base);
  auto shifted = base;
  for (auto& v : shifted.a) v += 10;
  for (auto& v : shifted.b) v += 10;
  EXPECT_NEAR(paired_ttest(shifted).t, s.t, 1e-9);
  const auto swapped = paired_ttest(sample_of(base.b, base.a));
  EXPECT_EQ(swapped.mean_diff, -s.mean_diff);
  EXPECT_EQ(swapped.t, -s.t);
  EXPECT_EQ(swapped.cohens_d, -s.cohens_d);
  EXPECT_EQ(swapped.p_two_sided, s.p_two_sided);
}

TEST(EffectSizes, HandArithmetic) {
  const auto e = effect_sizes(sample_of({1, 1, 1, 3}, {0, 0, 0, 0}));
  EXPECT_NEAR(e.cohens_d, 1.5, 1e-12);
  EXPECT_NEAR(e.hedges_g, 1.5 * (1 - 3.0 / 11.0), 1e-12);
  EXPECT_NEAR(hedges_correction(81), 1 - 3.0 / 323.0, 1e-15);
  const auto zero = effect_sizes(sample_of({1, 2, 3}, {2, 1, 3}));
  EXPECT_EQ(zero.cohens_d, 0.0);
  EXPECT_EQ(zero.hedges_g, 0.0);
}

TEST(SummarizeStudy, ParticipantMeansAndExclusion) {
  const std::map<std::string, Condition> conditions{
      {"i1", Condition::kModelA}, {"i2", Condition::kModelA}, {"i3", Condition::kModelB}, {"i4", Condition::kModelB}};
  const std::vector<StudyResponse> responses{{"p1", "i1", 3, ""}, {"p1", "i2", 5, ""}, {"p1", "i3", 2, ""},
                                             {"p1", "i4", 2, ""}, {"p2", "i1", 7, ""}};
  const auto s = summarize_study(responses, conditions);
  ASSERT_EQ(s.participants, std::vector<std::string>{"p1"});
  EXPECT_EQ(s.sample.a, std::vector<double>{4.0});
  EXPECT_EQ(s.sample.b, std::vector<double>{2.0});
  EXPECT_EQ(s.excluded, std::vector<std::string>{"p2"});
  const std::vector<StudyResponse> none{{"p2", "i1", 7, ""}};
  EXPECT_THROW(summarize_study(none, conditions), ValidationError);
}

TEST(Report, ThreeBlocksInBothForms) {
  const auto f = embench::testing::paired_reference_fixture();
  PairedSample sample = sample_of(f.a, f.b);
  const auto s = paired_ttest(sample);
  const auto text = format_report_text(sample, s);
  for (const char* block : {"Paired Samples Statistics", "Paired Samples Test", "Paired Samples Effect Sizes",
                            "21.898", "1.13825", "1.36577", "2.418", "< .0005", "unavailable"}) {
    EXPECT_NE(text.find(block), std::string::npos) << block;
  }
  const auto j = nlohmann::json::parse(format_report_json(sample, s));
  EXPECT_NEAR(j["test"]["t"].get<double>(), 21.898, 1e-3);
  EXPECT_TRUE(j["effect_sizes"][0]["ci95"].is_null());
  EXPECT_EQ(j["statistics"].size(), 2u);
}
