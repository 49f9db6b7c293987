#pragma once

#include <string>
#include <vector>

#include "embench/ingest.hpp"
#include "support/support.hpp"

namespace embench::testing {

// Three separated blobs whose annotations draw from disjoint vocabularies.
// Every word of a blob appears in at least 90% of that blob's annotations so
// the top words of each topic are exactly the blob's vocabulary.
struct TopicFixture {
  std::vector<AnnotationRecord> records;
  EmbeddingMatrix embeddings;
  std::vector<std::vector<std::string>> vocab;
};

inline TopicFixture make_topic_fixture(std::size_t per_blob = 40, std::uint64_t seed = 3) {
  TopicFixture f;
  f.vocab = {{"beach", "sand", "sea", "sun"}, {"mountain", "rock", "snow"}, {"church", "street", "tower", "town", "wall"}};
  const auto blobs = make_blobs({{0, 0, 0}, {30, 0, 0}, {0, 30, 0}}, per_blob, 1.0, seed);
  f.embeddings = blobs.x;
  for (std::size_t i = 0; i < blobs.x.rows(); ++i) {
    const auto& words = f.vocab[blobs.labels[i]];
    std::string text;
    for (std::size_t w = 0; w < words.size(); ++w) {
      // Drop one word from every tenth record to vary counts.
      if (i % 10 == 0 && w == i % words.size()) continue;
      text += (text.empty() ? "" : " ") + words[w];
    }
    f.records.push_back({blobs.x.id(i), "img/" + blobs.x.id(i) + ".jpg", text, {}});
  }
  return f;
}

}  // namespace embench::testing
