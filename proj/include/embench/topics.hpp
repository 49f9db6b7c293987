#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "embench/cluster.hpp"
#include "embench/ingest.hpp"

namespace embench::topics {

struct Projection {
  std::size_t dims = 0;
  std::size_t input_dim = 0;
  std::vector<double> coords;       // n x dims
  std::vector<double> components;   // dims x input_dim, orthonormal rows
  std::vector<double> mean;         // input_dim
  std::vector<double> explained_variance_ratio;  // dims, non-increasing
  std::vector<double> eigenvalues;  // all input_dim, descending (population covariance)

  std::span<const double> coord(std::size_t i) const { return {coords.data() + i * dims, dims}; }
  std::span<const double> component(std::size_t c) const {
    return {components.data() + c * input_dim, input_dim};
  }

  // Coordinates of arbitrary rows in this basis.
  std::vector<double> transform(const EmbeddingMatrix& x) const;
  // Back-projection of coords into the input space (n x input_dim).
  std::vector<double> reconstruct() const;
};

// Mean-centred projection onto the top `dims` (2 or 3) eigenvectors of the
// covariance. Each axis is signed so its largest-magnitude loading is
// positive.
Projection pca_project(const EmbeddingMatrix& x, std::size_t dims = 2);

struct TopicWord {
  std::string term;
  std::size_t within = 0;
  std::size_t overall = 0;

  bool operator==(const TopicWord&) const = default;
};

struct TopicSummary {
  int topic_id = 0;
  std::size_t population = 0;
  std::vector<TopicWord> top_words;
};

inline constexpr std::size_t kDefaultTopWords = 15;

// Terms of one annotation: whitespace unigrams, plus each two-word tag whose
// words appear adjacently in the text (once per adjacent occurrence).
std::vector<std::string> annotation_terms(const AnnotationRecord& record);

// One summary per topic in [0, k). Words ranked by within-topic count, then
// lexicographically.
std::vector<TopicSummary> topic_word_stats(std::span<const AnnotationRecord> records,
                                           std::span<const int> assignments, std::size_t k,
                                           std::size_t top_n = kDefaultTopWords);

struct BoardTopic {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  std::size_t population = 0;
  double radius = 0.0;
  std::vector<TopicWord> words;

  bool operator==(const BoardTopic&) const = default;
};

struct BoardPayload {
  std::size_t k = 0;
  std::vector<BoardTopic> topics;
  std::string meta_json = "{}";  // free-form object, serialized verbatim

  bool operator==(const BoardPayload&) const = default;
};

// Radius rule: radius = population / max_population (0 for empty topics).
BoardPayload build_board(const cluster::ClusterModel& model, const Projection& centroid_projection,
                         std::span<const TopicSummary> topics);

std::string board_to_json(const BoardPayload& board, int indent = -1);
BoardPayload board_from_json(const std::string& text);

// "id<TAB>word, word, ..." lines in topic order.
std::string topic_table(std::span<const TopicSummary> topics);

}  // namespace embench::topics
