#include "embench/stats.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "embench/error.hpp"

namespace embench::stats {

namespace {

struct MeanSd {
  double mean;
  double sd;
};

MeanSd mean_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::vector<double> differences(const PairedSample& sample) {
  if (sample.a.size() != sample.b.size()) {
    throw ValidationError("paired sample has " + std::to_string(sample.a.size()) + " and " +
                          std::to_string(sample.b.size()) + " values");
  }
  if (sample.a.size() < 2) throw ValidationError("paired sample needs at least two pairs");
  std::vector<double> d(sample.a.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(sample.a[i]) || !std::isfinite(sample.b[i])) {
      throw ValidationError("paired sample contains a non-finite value");
    }
    d[i] = sample.a[i] - sample.b[i];
  }
  return d;
}

}  // namespace

double hedges_correction(double df) { return 1.0 - 3.0 / (4.0 * df - 1.0); }

double student_t_two_sided_p(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double student_t_upper_quantile(double upper_tail, double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(boost::math::complement(dist, upper_tail));
}

EffectSizes effect_sizes(const PairedSample& sample) {
  const auto d = differences(sample);
  const auto [mean, sd] = mean_sd(d);
  if (!(sd > 0.0)) throw NumericError("differences have zero variance; effect size is undefined");
  EffectSizes e;
  e.cohens_d = mean / sd;
  e.hedges_g = e.cohens_d * hedges_correction(static_cast<double>(d.size() - 1));
  return e;
}

PairedStats paired_ttest(const PairedSample& sample) {
  const auto d = differences(sample);
  PairedStats s;
  s.n = d.size();
  const double root_n = std::sqrt(static_cast<double>(s.n));
  const auto a = mean_sd(sample.a);
  const auto b = mean_sd(sample.b);
  const auto diff = mean_sd(d);
  if (!(diff.sd > 0.0)) throw NumericError("differences have zero variance; t is undefined");

  s.mean_a = a.mean;
  s.sd_a = a.sd;
  s.se_a = a.sd / root_n;
  s.mean_b = b.mean;
  s.sd_b = b.sd;
  s.se_b = b.sd / root_n;
  s.mean_diff = diff.mean;
  s.sd_diff = diff.sd;
  s.se_diff = diff.sd / root_n;
  s.t = s.mean_diff / s.se_diff;
  s.df = static_cast<double>(s.n - 1);
  s.p_two_sided = student_t_two_sided_p(s.t, s.df);
  const double t_crit = student_t_upper_quantile(0.025, s.df);
  s.ci_lower = s.mean_diff - t_crit * s.se_diff;
  s.ci_upper = s.mean_diff + t_crit * s.se_diff;
  s.cohens_d = s.mean_diff / s.sd_diff;
  const double j = hedges_correction(s.df);
  s.hedges_g = s.cohens_d * j;
  s.hedges_standardizer = s.sd_diff / j;
  return s;
}

std::string to_string(Condition c) { return c == Condition::kModelA ? "model_a" : "model_b"; }

Condition condition_from_string(const std::string& s) {
  if (s == "model_a") return Condition::kModelA;
  if (s == "model_b") return Condition::kModelB;
  throw ValidationError("unknown condition '" + s + "'");
}

StudySummary summarize_study(std::span<const StudyResponse> responses,
                             const std::map<std::string, Condition>& item_conditions,
                             const std::string& label_a, const std::string& label_b) {
  struct Totals {
    double sum[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
  };
  std::map<std::string, Totals> by_participant;
  for (const auto& r : responses) {
    auto it = item_conditions.find(r.item_id);
    if (it == item_conditions.end()) throw ValidationError("response for unknown item '" + r.item_id + "'");
    if (r.rating < kMinRating || r.rating > kMaxRating) {
      throw ValidationError("rating " + std::to_string(r.rating) + " outside 1..7");
    }
    const int slot = it->second == Condition::kModelA ? 0 : 1;
    auto& t = by_participant[r.participant_id];
    t.sum[slot] += r.rating;
    ++t.count[slot];
  }

  StudySummary out;
  out.sample.label_a = label_a;
  out.sample.label_b = label_b;
  for (const auto& [participant, t] : by_participant) {
    if (t.count[0] == 0 || t.count[1] == 0) {
      out.excluded.push_back(participant);
      continue;
    }
    out.participants.push_back(participant);
    out.sample.a.push_back(t.sum[0] / static_cast<double>(t.count[0]));
    out.sample.b.push_back(t.sum[1] / static_cast<double>(t.count[1]));
  }
  if (out.participants.empty()) throw ValidationError("no participant rated both conditions");
  return out;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string p_text(double p) { return p < 0.0005 ? "< .0005" : fmt("%.4f", p); }

}  // namespace

std::string format_report_text(const PairedSample& sample, const PairedStats& s) {
  const std::string pair = sample.label_a + " - " + sample.label_b;
  std::string out;
  out += "Paired Samples Statistics\n";
  out += "  condition          mean        N     std. dev.   std. err.\n";
  char row[256];
  std::snprintf(row, sizeof row, "  %-16s %10.5f %6zu %12.5f %11.5f\n", sample.label_a.c_str(), s.mean_a, s.n, s.sd_a, s.se_a);
  out += row;
  std::snprintf(row, sizeof row, "  %-16s %10.5f %6zu %12.5f %11.5f\n", sample.label_b.c_str(), s.mean_b, s.n, s.sd_b, s.se_b);
  out += row;
  out += "\nPaired Samples Test\n";
  out += "  pair                 mean    std. dev.  std. err.   95% CI lower  95% CI upper        t     df   p (2-tailed)\n";
  std::snprintf(row, sizeof row, "  %-16s %9.5f %11.5f %10.5f %14.5f %13.5f %9.3f %6.0f   %s\n", pair.c_str(), s.mean_diff,
                s.sd_diff, s.se_diff, s.ci_lower, s.ci_upper, s.t, s.df, p_text(s.p_two_sided).c_str());
  out += row;
  out += "\nPaired Samples Effect Sizes\n";
  out += "  pair             measure              standardizer  point estimate  95% CI\n";
  std::snprintf(row, sizeof row, "  %-16s %-20s %12.5f %15.3f  unavailable\n", pair.c_str(), "Cohen's d", s.sd_diff, s.cohens_d);
  out += row;
  std::snprintf(row, sizeof row, "  %-16s %-20s %12.5f %15.3f  unavailable\n", pair.c_str(), "Hedges' correction",
                s.hedges_standardizer, s.hedges_g);
  out += row;
  return out;
}

std::string format_report_json(const PairedSample& sample, const PairedStats& s, int indent) {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["statistics"] = ojson::array({
      {{"condition", sample.label_a}, {"mean", s.mean_a}, {"n", s.n}, {"sd", s.sd_a}, {"se", s.se_a}},
      {{"condition", sample.label_b}, {"mean", s.mean_b}, {"n", s.n}, {"sd", s.sd_b}, {"se", s.se_b}},
  });
  j["test"] = {{"pair", sample.label_a + " - " + sample.label_b},
               {"mean_diff", s.mean_diff},
               {"sd_diff", s.sd_diff},
               {"se_diff", s.se_diff},
               {"ci95", {s.ci_lower, s.ci_upper}},
               {"t", s.t},
               {"df", s.df},
               {"p_two_sided", s.p_two_sided}};
  j["effect_sizes"] = ojson::array({
      {{"measure", "cohens_d"}, {"standardizer", s.sd_diff}, {"point_estimate", s.cohens_d}, {"ci95", nullptr},
       {"ci95_note", "unavailable"}},
      {{"measure", "hedges_g"}, {"standardizer", s.hedges_standardizer}, {"point_estimate", s.hedges_g},
       {"ci95", nullptr}, {"ci95_note", "unavailable"}},
  });
  return j.dump(indent);
}

}  // namespace embench::stats
