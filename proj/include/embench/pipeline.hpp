#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "embench/cluster.hpp"
#include "embench/ingest.hpp"
#include "embench/probe.hpp"
#include "embench/stats.hpp"
#include "embench/topics.hpp"

namespace embench::pipeline {

// ---- probe benchmark ------------------------------------------------------

struct BenchmarkConfig {
  probe::ProbeConfig probe;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  std::optional<std::size_t> per_class;  // balanced subsample before splitting
  bool normalize = false;
};

struct BenchmarkRow {
  std::string name;
  probe::EvalReport report;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  double train_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Per-class seeded split: the first round(fraction * class size) shuffled
// examples of each class train, the rest test. Returns dataset indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const LabeledExample> dataset, double train_fraction, std::uint64_t seed);

// Embedding rows for the given dataset ids; missing ids raise ValidationError
// listing them.
EmbeddingMatrix align_rows(const EmbeddingMatrix& source, std::span<const std::string> ids,
                           const std::string& source_name);

// One probe per embedding source, identical split and training config.
BenchmarkReport run_benchmark(std::span<const LabeledExample> dataset,
                              std::span<const std::pair<std::string, const EmbeddingMatrix*>> sources,
                              const BenchmarkConfig& config);

nlohmann::ordered_json to_json(const BenchmarkReport& report);
std::string format_table(const BenchmarkReport& report);

// ---- topic pipeline -------------------------------------------------------

// Which rows the PCA axes are fitted on. Centroid fits need k > 2; smaller
// k falls back to fitting on all points.
enum class ProjectionFit { kCentroids, kPoints };

struct TopicPipelineOptions {
  std::size_t k_min = 2;
  std::size_t k_max = 40;
  std::uint64_t seed = 0;
  cluster::KMeansOptions kmeans;
  bool normalize = false;
  std::size_t top_words = topics::kDefaultTopWords;
  std::size_t top_samples = 10;
  ProjectionFit projection_fit = ProjectionFit::kCentroids;
};

struct TopicPipelineResult {
  std::vector<AnnotationRecord> records;  // in clustering (sorted id) order
  EmbeddingMatrix embeddings;             // same order
  cluster::KSelection selection;
  topics::Projection centroid_projection;
  std::string projection_fit;  // "centroids" or "points"
  std::vector<topics::TopicSummary> topics;
  topics::BoardPayload board;
  std::vector<std::vector<std::size_t>> nearest;  // row indices per cluster

  const cluster::ClusterModel& model() const { return selection.best_model; }
};

// select_k -> fit -> PCA of the centroids -> topic words -> board. In points
// mode, or with two clusters, the axes are fitted on all points and the
// centroids projected onto them.
TopicPipelineResult run_topic_pipeline(std::span<const AnnotationRecord> annotations,
                                       const EmbeddingMatrix& embeddings, const TopicPipelineOptions& options);

// {"clusters":[{"id","words":[...],"samples":[{"id","image_ref"}]}]}
std::string samples_to_json(const TopicPipelineResult& result, int indent = 2);
// Topic words followed by the nearest sample ids, one topic per line.
std::string topic_samples_table(const TopicPipelineResult& result);

// ---- study analysis -------------------------------------------------------

// TSV rows "participant<TAB>a<TAB>b"; a header line starting with
// "participant" is skipped.
stats::PairedSample load_pairs(const std::filesystem::path& path, const std::string& label_a,
                               const std::string& label_b);

// ---- run manifest ---------------------------------------------------------

struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;
  std::string rng_algorithm;
};

std::string file_digest(const std::filesystem::path& path);
std::string utc_timestamp();
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace embench::pipeline
