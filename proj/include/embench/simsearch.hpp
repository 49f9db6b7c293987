#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embench/ingest.hpp"

namespace embench::simsearch {

// Words (the matrix ids) with aligned vectors.
class WordVectorTable {
 public:
  explicit WordVectorTable(EmbeddingMatrix vectors);

  const EmbeddingMatrix& vectors() const noexcept { return vectors_; }
  std::size_t size() const noexcept { return vectors_.rows(); }
  const std::string& word(std::size_t i) const { return vectors_.id(i); }
  double norm(std::size_t i) const { return norms_[i]; }

  // Cosine of rows i and j; zero-norm rows raise NumericError naming the word.
  double cosine(std::size_t i, std::size_t j) const;

 private:
  EmbeddingMatrix vectors_;
  std::vector<double> norms_;
};

struct SynonymResult {
  std::string query;
  std::vector<std::pair<std::string, double>> neighbors;
};

// Exact cosine ranking of every other word; ties break lexicographically.
SynonymResult top_k_similar(const std::string& query, const WordVectorTable& table, std::size_t k);

// Ranking for a supplied query vector. `exclude`, when given, is left out.
SynonymResult top_k_similar(std::span<const double> query_vector, const WordVectorTable& table,
                            std::size_t k, const std::optional<std::string>& exclude = std::nullopt);

inline constexpr std::size_t kHistogramBins = 40;

struct SimilaritySummary {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  std::size_t pairs = 0;
  std::vector<std::size_t> histogram;  // kHistogramBins uniform bins over [-1, 1]
};

// Cosine over sample_pairs seeded random distinct word pairs, or over every
// pair when there are no more than sample_pairs of them.
SimilaritySummary similarity_distribution(const WordVectorTable& table, std::size_t sample_pairs,
                                          std::uint64_t seed);

std::string to_json(const SynonymResult& result, int indent = 2);

}  // namespace embench::simsearch
