#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace embench::stats {

struct PairedSample {
  std::string label_a = "a";
  std::string label_b = "b";
  std::vector<double> a;
  std::vector<double> b;
};

struct PairedStats {
  std::size_t n = 0;
  double mean_a = 0.0, mean_b = 0.0;
  double sd_a = 0.0, sd_b = 0.0;
  double se_a = 0.0, se_b = 0.0;
  double mean_diff = 0.0, sd_diff = 0.0, se_diff = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 0.0;
  double ci_lower = 0.0, ci_upper = 0.0;  // 95% CI of the mean difference
  double cohens_d = 0.0;
  double hedges_g = 0.0;
  double hedges_standardizer = 0.0;  // sd_diff / J(df)
};

// Paired-samples t-test on d_i = a_i - b_i. Throws ValidationError for
// misaligned or short samples and NumericError when sd(d) is zero.
PairedStats paired_ttest(const PairedSample& sample);

struct EffectSizes {
  double cohens_d = 0.0;
  double hedges_g = 0.0;
};

// d = mean(d_i) / sd(d_i); g = d * (1 - 3 / (4 df - 1)).
EffectSizes effect_sizes(const PairedSample& sample);

double hedges_correction(double df);

// Two-sided p-value of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);
// Upper quantile t such that P(T > t) = upper_tail.
double student_t_upper_quantile(double upper_tail, double df);

enum class Condition { kModelA, kModelB };

std::string to_string(Condition c);
Condition condition_from_string(const std::string& s);

struct StudyResponse {
  std::string participant_id;
  std::string item_id;
  int rating = 0;  // 1 = very similar .. 7 = very different
  std::string received_at;
};

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 7;

struct StudySummary {
  PairedSample sample;
  std::vector<std::string> participants;  // complete participants, aligned with sample
  std::vector<std::string> excluded;      // missing one of the two conditions
};

// Per-participant mean rating in each condition.
StudySummary summarize_study(std::span<const StudyResponse> responses,
                             const std::map<std::string, Condition>& item_conditions,
                             const std::string& label_a = "model_a",
                             const std::string& label_b = "model_b");

// Statistics / Test / Effect Sizes blocks.
std::string format_report_text(const PairedSample& sample, const PairedStats& stats);
std::string format_report_json(const PairedSample& sample, const PairedStats& stats, int indent = 2);

}  // namespace embench::stats
