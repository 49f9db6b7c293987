#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace embench {

// n rows of d-dimensional finite vectors, each with a unique string id.
// Stored row-major. Immutable once constructed.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  // Throws ValidationError on duplicate ids, a size mismatch, or non-finite
  // components. An empty matrix may have dim 0.
  EmbeddingMatrix(std::vector<std::string> ids, std::vector<double> values,
                  std::size_t dim);

  static EmbeddingMatrix from_rows(std::vector<std::string> ids,
                                   const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return ids_.empty(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }

  std::optional<std::size_t> find(const std::string& id) const;

  // Rows reordered to the given row indices.
  EmbeddingMatrix select(std::span<const std::size_t> rows) const;

  bool operator==(const EmbeddingMatrix& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && values_ == other.values_;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class EmbeddingFormat { kTsv, kJsonl };

EmbeddingFormat embedding_format_from_path(const std::filesystem::path& path);

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                EmbeddingFormat format);
void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingMatrix& matrix, EmbeddingFormat format);

// Rows sorted by id (byte order).
EmbeddingMatrix sorted_by_id(const EmbeddingMatrix& matrix);

// Rows scaled to unit Euclidean norm. Zero rows raise NumericError.
EmbeddingMatrix l2_normalized(const EmbeddingMatrix& matrix);

struct LabeledExample {
  std::string id;
  std::string text;
  int label = 0;

  bool operator==(const LabeledExample&) const = default;
};

struct AnnotationRecord {
  std::string id;
  std::string image_ref;
  std::string annotation_text;
  std::vector<std::string> tags;
};

std::vector<LabeledExample> load_labeled_examples(const std::filesystem::path& path);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);

// per_class examples of every class in `classes` (every label present in the
// dataset when empty). Output keeps dataset order.
std::vector<LabeledExample> balanced_sample(std::span<const LabeledExample> dataset,
                                            std::size_t per_class, std::uint64_t seed,
                                            std::span<const int> classes = {});

// Anything mapping a batch of texts to one vector per text.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
};

struct HttpProviderOptions {
  int max_attempts = 3;
  int backoff_ms = 200;
  int timeout_seconds = 60;
};

// Speaks the {"texts": [...]} -> {"vectors": [[...]...]} JSON protocol.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(std::string endpoint, HttpProviderOptions options = {});
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
  std::string scheme_host_port_;
  std::string path_;
  HttpProviderOptions options_;
};

// One vector per text, order-aligned, in ceil(n / batch_size) provider calls.
// Row ids default to the decimal row index.
EmbeddingMatrix fetch_embeddings(std::span<const std::string> texts,
                                 EmbeddingProvider& provider, std::size_t batch_size,
                                 std::span<const std::string> ids = {});

EmbeddingMatrix fetch_embeddings(std::span<const std::string> texts,
                                 const std::string& endpoint, std::size_t batch_size,
                                 std::span<const std::string> ids = {});

// Formats a double with the 9 significant digits used by every writer.
std::string format_component(double value);

}  // namespace embench
