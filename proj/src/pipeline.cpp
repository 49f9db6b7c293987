#include "embench/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>

#include "embench/error.hpp"
#include "embench/rng.hpp"

namespace embench::pipeline {

using ojson = nlohmann::ordered_json;

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const LabeledExample> dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie strictly between 0 and 1");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset[i].label].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> train, test;
  for (auto& [label, rows] : by_class) {
    rng.shuffle(rows);
    const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
    train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
    test.insert(test.end(), rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

EmbeddingMatrix align_rows(const EmbeddingMatrix& source, std::span<const std::string> ids,
                           const std::string& source_name) {
  std::vector<std::size_t> rows;
  std::vector<std::string> missing;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    if (auto r = source.find(id)) {
      rows.push_back(*r);
    } else {
      missing.push_back(id);
    }
  }
  if (!missing.empty()) {
    std::string msg = source_name + " lacks " + std::to_string(missing.size()) + " ids:";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 20); ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw ValidationError(msg);
  }
  return source.select(rows);
}

BenchmarkReport run_benchmark(std::span<const LabeledExample> dataset,
                              std::span<const std::pair<std::string, const EmbeddingMatrix*>> sources,
                              const BenchmarkConfig& config) {
  if (dataset.empty()) throw ValidationError("benchmark dataset is empty");
  std::vector<LabeledExample> examples(dataset.begin(), dataset.end());
  if (config.per_class) examples = balanced_sample(examples, *config.per_class, config.seed);

  std::vector<std::string> ids;
  ids.reserve(examples.size());
  for (const auto& e : examples) ids.push_back(e.id);
  // Alignment is checked for every source before any training starts.
  std::vector<EmbeddingMatrix> aligned;
  for (const auto& [name, matrix] : sources) {
    auto m = align_rows(*matrix, ids, name);
    aligned.push_back(config.normalize ? l2_normalized(m) : std::move(m));
  }

  const auto [train_rows, test_rows] = stratified_split(examples, config.train_fraction, config.seed);
  std::vector<int> train_labels, test_labels;
  for (auto r : train_rows) train_labels.push_back(examples[r].label);
  for (auto r : test_rows) test_labels.push_back(examples[r].label);

  BenchmarkReport report;
  report.train_examples = train_rows.size();
  report.test_examples = test_rows.size();
  report.train_fraction = config.train_fraction;
  report.seed = config.seed;
  for (std::size_t s = 0; s < aligned.size(); ++s) {
    const auto train = aligned[s].select(train_rows);
    const auto test = aligned[s].select(test_rows);
    auto model = probe::train_probe(train, train_labels, config.probe);
    report.rows.push_back({sources[s].first, probe::evaluate(model, test, test_labels)});
  }
  return report;
}

ojson to_json(const BenchmarkReport& report) {
  ojson j;
  j["train_examples"] = report.train_examples;
  j["test_examples"] = report.test_examples;
  j["train_fraction"] = report.train_fraction;
  j["seed"] = report.seed;
  auto& rows = j["results"] = ojson::array();
  for (const auto& row : report.rows) {
    ojson r = ojson::parse(probe::to_json(row.report, -1));
    r["source"] = row.name;
    rows.push_back(std::move(r));
  }
  return j;
}

std::string format_table(const BenchmarkReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %16s %10s %10s\n", "source", "CrossEntropy", "Accuracy", "AUC");
  out += line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%-20s %16.4f %10.4f %10.4f\n", row.name.c_str(), row.report.cross_entropy,
                  row.report.accuracy, row.report.auc);
    out += line;
  }
  std::snprintf(line, sizeof line, "train %zu / test %zu (fraction %.2f, seed %llu)\n", report.train_examples,
                report.test_examples, report.train_fraction, static_cast<unsigned long long>(report.seed));
  out += line;
  return out;
}

TopicPipelineResult run_topic_pipeline(std::span<const AnnotationRecord> annotations,
                                       const EmbeddingMatrix& embeddings, const TopicPipelineOptions& options) {
  TopicPipelineResult result;
  result.records.assign(annotations.begin(), annotations.end());
  std::sort(result.records.begin(), result.records.end(),
            [](const AnnotationRecord& a, const AnnotationRecord& b) { return a.id < b.id; });
  std::vector<std::string> ids;
  for (const auto& r : result.records) ids.push_back(r.id);
  try {
    auto aligned = align_rows(embeddings, ids, "embeddings");
    result.embeddings = options.normalize ? l2_normalized(aligned) : std::move(aligned);
  } catch (const Error& e) {
    throw ValidationError(std::string("[align] ") + e.what());
  }

  try {
    result.selection = cluster::select_k(result.embeddings, options.k_min, options.k_max, options.seed, options.kmeans);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("[select_k] ") + e.what());
  }
  const auto& model = result.model();

  std::vector<std::string> centroid_ids;
  for (std::size_t c = 0; c < model.k; ++c) centroid_ids.push_back(std::to_string(c));
  const EmbeddingMatrix centroids(centroid_ids, model.centroids, model.dim);
  try {
    if (options.projection_fit == ProjectionFit::kCentroids && model.k > 2) {
      result.centroid_projection = topics::pca_project(centroids, 2);
      result.projection_fit = "centroids";
    } else {
      auto basis = topics::pca_project(result.embeddings, 2);
      basis.coords = basis.transform(centroids);
      result.centroid_projection = std::move(basis);
      result.projection_fit = "points";
    }
  } catch (const Error& e) {
    throw NumericError(std::string("[pca_project] ") + e.what());
  }

  result.topics = topics::topic_word_stats(result.records, model.assignments, model.k, options.top_words);
  result.board = topics::build_board(model, result.centroid_projection, result.topics);
  auto meta = ojson::parse(result.board.meta_json);
  meta["projection_fit"] = result.projection_fit;
  meta["seed"] = options.seed;
  meta["k"] = model.k;
  auto& scores = meta["silhouette"] = ojson::array();
  for (const auto& [k, s] : result.selection.scores) scores.push_back({{"k", k}, {"score", s}});
  result.board.meta_json = meta.dump();

  result.nearest = cluster::nearest_rows(model, result.embeddings, options.top_samples);
  return result;
}

std::string samples_to_json(const TopicPipelineResult& result, int indent) {
  ojson j;
  auto& clusters = j["clusters"] = ojson::array();
  for (std::size_t c = 0; c < result.nearest.size(); ++c) {
    ojson entry;
    entry["id"] = c;
    auto& words = entry["words"] = ojson::array();
    for (const auto& w : result.topics[c].top_words) words.push_back(w.term);
    auto& samples = entry["samples"] = ojson::array();
    for (auto r : result.nearest[c]) {
      samples.push_back({{"id", result.records[r].id}, {"image_ref", result.records[r].image_ref}});
    }
    clusters.push_back(std::move(entry));
  }
  return j.dump(indent);
}

std::string topic_samples_table(const TopicPipelineResult& result) {
  std::string out = "topic\twords\tnearest samples\n";
  for (std::size_t c = 0; c < result.topics.size(); ++c) {
    out += std::to_string(c) + '\t';
    const auto& words = result.topics[c].top_words;
    for (std::size_t i = 0; i < words.size(); ++i) out += (i ? ", " : "") + words[i].term;
    out += '\t';
    for (std::size_t i = 0; i < result.nearest[c].size(); ++i) {
      out += (i ? " " : "") + result.records[result.nearest[c][i]].id;
    }
    out += '\n';
  }
  return out;
}

stats::PairedSample load_pairs(const std::filesystem::path& path, const std::string& label_a,
                               const std::string& label_b) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  stats::PairedSample sample;
  sample.label_a = label_a;
  sample.label_b = label_b;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("participant", 0) == 0) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) throw ParseError(path.string() + ":" + std::to_string(number) + ": expected 3 fields");
    try {
      std::size_t used_a = 0, used_b = 0;
      const double a = std::stod(fields[1], &used_a);
      const double b = std::stod(fields[2], &used_b);
      if (used_a != fields[1].size() || used_b != fields[2].size()) throw std::invalid_argument("trailing");
      sample.a.push_back(a);
      sample.b.push_back(b);
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(number) + ": invalid number", fields[0]);
    }
  }
  return sample;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  ojson j;
  j["command"] = manifest.command;
  j["config"] = manifest.config;
  j["seed"] = manifest.seed;
  j["rng_algorithm"] = manifest.rng_algorithm.empty() ? std::string(Rng::kAlgorithm) : manifest.rng_algorithm;
  auto& inputs = j["inputs"] = ojson::array();
  for (const auto& [p, digest] : manifest.inputs) inputs.push_back({{"path", p}, {"digest", digest}});
  j["outputs"] = manifest.outputs;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace embench::pipeline
