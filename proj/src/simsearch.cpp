#include "embench/simsearch.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

#include "embench/error.hpp"
#include "embench/rng.hpp"

namespace embench::simsearch {

WordVectorTable::WordVectorTable(EmbeddingMatrix vectors) : vectors_(std::move(vectors)) {
  norms_.reserve(vectors_.rows());
  for (std::size_t i = 0; i < vectors_.rows(); ++i) {
    double s = 0.0;
    for (double v : vectors_.row(i)) s += v * v;
    norms_.push_back(std::sqrt(s));
  }
}

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

void require_nonzero(const WordVectorTable& table, std::size_t i) {
  if (table.norm(i) == 0.0) throw NumericError("zero-norm vector for word '" + table.word(i) + "'");
}

}  // namespace

double WordVectorTable::cosine(std::size_t i, std::size_t j) const {
  require_nonzero(*this, i);
  require_nonzero(*this, j);
  return clamp_unit(dot(vectors_.row(i), vectors_.row(j)) / (norms_[i] * norms_[j]));
}

SynonymResult top_k_similar(std::span<const double> query_vector, const WordVectorTable& table,
                            std::size_t k, const std::optional<std::string>& exclude) {
  if (query_vector.size() != table.vectors().dim()) {
    throw ValidationError("query vector dimension does not match the table");
  }
  const double qnorm = std::sqrt(dot(query_vector, query_vector));
  if (qnorm == 0.0) throw NumericError("zero-norm query vector" + (exclude ? " for word '" + *exclude + "'" : std::string()));

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (exclude && table.word(i) == *exclude) continue;
    require_nonzero(table, i);
    scored.emplace_back(table.word(i),
                        clamp_unit(dot(query_vector, table.vectors().row(i)) / (qnorm * table.norm(i))));
  }
  auto order = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), order);
  scored.resize(keep);

  SynonymResult result;
  if (exclude) result.query = *exclude;
  result.neighbors = std::move(scored);
  return result;
}

SynonymResult top_k_similar(const std::string& query, const WordVectorTable& table, std::size_t k) {
  auto row = table.vectors().find(query);
  if (!row) throw NotFoundError("word '" + query + "' is not in the table");
  require_nonzero(table, *row);
  return top_k_similar(table.vectors().row(*row), table, k, query);
}

SimilaritySummary similarity_distribution(const WordVectorTable& table, std::size_t sample_pairs,
                                          std::uint64_t seed) {
  const std::size_t n = table.size();
  if (n < 2) throw ValidationError("similarity distribution needs at least two words");
  if (sample_pairs == 0) throw ValidationError("sample_pairs must be positive");

  std::vector<double> values;
  const std::uint64_t all_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (all_pairs <= sample_pairs) {
    values.reserve(all_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) values.push_back(table.cosine(i, j));
    }
  } else {
    Rng rng(seed);
    std::unordered_set<std::uint64_t> seen;
    values.reserve(sample_pairs);
    while (values.size() < sample_pairs) {
      auto i = static_cast<std::size_t>(rng.uniform_index(n));
      auto j = static_cast<std::size_t>(rng.uniform_index(n));
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (!seen.insert(static_cast<std::uint64_t>(i) * n + j).second) continue;
      values.push_back(table.cosine(i, j));
    }
  }

  SimilaritySummary s;
  s.pairs = values.size();
  s.histogram.assign(kHistogramBins, 0);
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    auto bin = static_cast<std::size_t>((v + 1.0) / 2.0 * static_cast<double>(kHistogramBins));
    ++s.histogram[std::min(bin, kHistogramBins - 1)];
  }
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

std::string to_json(const SynonymResult& result, int indent) {
  nlohmann::ordered_json j;
  j["query"] = result.query;
  auto& neighbors = j["neighbors"] = nlohmann::ordered_json::array();
  for (const auto& [word, sim] : result.neighbors) neighbors.push_back({{"word", word}, {"similarity", sim}});
  return j.dump(indent);
}

}  // namespace embench::simsearch
