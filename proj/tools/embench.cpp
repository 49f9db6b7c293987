// embench: command surface over the embedding evaluation workbench.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embench/cluster.hpp"
#include "embench/error.hpp"
#include "embench/explorer.hpp"
#include "embench/ingest.hpp"
#include "embench/pipeline.hpp"
#include "embench/probe.hpp"
#include "embench/simsearch.hpp"
#include "embench/stats.hpp"
#include "embench/study.hpp"
#include "embench/textprep.hpp"
#include "embench/topics.hpp"
#include "embench/wordpiece.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace embench;

namespace {

constexpr const char* kEndpointEnv = "EMBENCH_ENDPOINT";

struct Common {
  std::uint64_t seed = 0;
  std::string format = "text";
  std::string manifest;
};

// Collects what a run read and wrote; written once the command finishes.
class Run {
 public:
  Run(std::string command, const Common& common) : common_(common) {
    manifest_.command = std::move(command);
    manifest_.seed = common.seed;
    manifest_.started_at = pipeline::utc_timestamp();
    manifest_.config["seed"] = common.seed;
    manifest_.config["format"] = common.format;
  }

  ojson& config() { return manifest_.config; }
  void input(const fs::path& p) { manifest_.inputs.emplace_back(p.string(), pipeline::file_digest(p)); }
  void output(const fs::path& p) { manifest_.outputs.push_back(p.string()); }

  void finish(const fs::path& primary_output = {}) {
    manifest_.finished_at = pipeline::utc_timestamp();
    fs::path path;
    if (!common_.manifest.empty()) {
      path = common_.manifest;
    } else if (!primary_output.empty()) {
      path = fs::path(primary_output.string() + ".manifest.json");
      if (fs::is_directory(primary_output)) path = primary_output / "manifest.json";
    } else {
      path = "embench.manifest.json";
    }
    pipeline::write_manifest(path, manifest_);
  }

  bool json() const { return common_.format == "json"; }

 private:
  const Common& common_;
  pipeline::RunManifest manifest_;
};

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("failed writing " + path.string());
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_file(output, text.back() == '\n' ? text : text + "\n");
  }
}

EmbeddingMatrix load_any_embeddings(const fs::path& path) {
  return load_embeddings(path, embedding_format_from_path(path));
}

void add_common(CLI::App* cmd, Common& common, bool reporting) {
  cmd->add_option("--seed", common.seed, "Seed for every random choice")->capture_default_str();
  if (reporting) {
    cmd->add_option("--format", common.format, "Report format")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();
  }
  cmd->add_option("--manifest", common.manifest, "Manifest path (default: next to the output)");
}

// ---- embed fetch ----------------------------------------------------------

struct FetchArgs {
  std::string input, output, endpoint, field = "text";
  std::size_t batch_size = 32;
  int max_attempts = 3;
};

void embed_fetch(const FetchArgs& a, const Common& common) {
  Run run("embed fetch", common);
  run.config()["input"] = a.input;
  run.config()["output"] = a.output;
  run.config()["endpoint"] = a.endpoint;
  run.config()["field"] = a.field;
  run.config()["batch_size"] = a.batch_size;
  run.config()["max_attempts"] = a.max_attempts;
  if (a.endpoint.empty()) {
    throw ValidationError(std::string("no endpoint: pass --endpoint or set ") + kEndpointEnv);
  }

  std::vector<std::string> ids, texts;
  if (fs::path(a.input).extension() == ".jsonl") {
    std::ifstream in(a.input, std::ios::binary);
    if (!in) throw IoError("cannot open " + a.input);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        throw ParseError(a.input + ":" + std::to_string(number) + ": invalid JSON");
      }
      if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() || !obj.contains(a.field) ||
          !obj[a.field].is_string()) {
        throw ParseError(a.input + ":" + std::to_string(number) + ": need string id and " + a.field);
      }
      ids.push_back(obj["id"].get<std::string>());
      texts.push_back(obj[a.field].get<std::string>());
    }
  } else {
    const auto corpus = read_sentence_corpus(a.input);
    texts = corpus.sentences;
    for (std::size_t i = 0; i < texts.size(); ++i) ids.push_back(std::to_string(i + 1));
  }
  run.input(a.input);

  HttpProviderOptions options;
  options.max_attempts = a.max_attempts;
  HttpEmbeddingProvider provider(a.endpoint, options);
  const auto matrix = fetch_embeddings(texts, provider, a.batch_size, ids);
  save_embeddings(a.output, matrix, embedding_format_from_path(a.output));
  run.output(a.output);
  run.finish(a.output);
  std::cerr << "embedded " << matrix.rows() << " texts, dim " << matrix.dim() << '\n';
}

// ---- prep split -----------------------------------------------------------

struct SplitArgs {
  std::string input, output, sidecar;
};

void prep_split(const SplitArgs& a, const Common& common) {
  Run run("prep split", common);
  const std::string sidecar = a.sidecar.empty() ? a.output + ".docs.tsv" : a.sidecar;
  run.config()["input"] = a.input;
  run.config()["output"] = a.output;
  run.config()["sidecar"] = sidecar;
  const auto docs = load_documents(a.input);
  run.input(a.input);
  const auto corpus = normalize_and_split(docs);
  write_sentence_corpus(corpus, a.output, sidecar);
  run.output(a.output);
  run.output(sidecar);
  run.finish(a.output);
  std::cerr << docs.size() << " documents, " << corpus.size() << " sentences\n";
}

// ---- tokenizer ------------------------------------------------------------

struct TrainArgs {
  std::string corpus, output;
  std::size_t vocab_size = wordpiece::kDefaultVocabSize;
  std::size_t min_frequency = 2;
};

void tokenizer_train(const TrainArgs& a, const Common& common) {
  Run run("tokenizer train", common);
  run.config()["corpus"] = a.corpus;
  run.config()["output"] = a.output;
  run.config()["vocab_size"] = a.vocab_size;
  run.config()["min_frequency"] = a.min_frequency;
  const auto corpus = read_sentence_corpus(a.corpus);
  run.input(a.corpus);
  const auto vocab = wordpiece::train_vocab(corpus, {a.vocab_size, a.min_frequency});
  wordpiece::save_vocab(vocab, a.output);
  run.output(a.output);
  run.finish(a.output);
  if (run.json()) {
    std::cout << ojson{{"vocab_size", vocab.size()}, {"requested", a.vocab_size}, {"output", a.output}}.dump(2)
              << '\n';
  } else {
    std::cout << "vocab size " << vocab.size() << " (requested " << a.vocab_size << ") -> " << a.output << '\n';
  }
}

struct EncodeArgs {
  std::string vocab, text, input, output;
  std::size_t max_length = wordpiece::kDefaultMaxLength;
};

void tokenizer_encode(const EncodeArgs& a, const Common& common) {
  Run run("tokenizer encode", common);
  run.config()["vocab"] = a.vocab;
  run.config()["max_length"] = a.max_length;
  run.config()["input"] = a.input;
  run.config()["text"] = a.text;
  run.config()["output"] = a.output;
  const auto vocab = wordpiece::load_vocab(a.vocab);
  run.input(a.vocab);
  std::vector<std::string> lines;
  if (!a.input.empty()) {
    lines = read_sentence_corpus(a.input).sentences;
    run.input(a.input);
  } else {
    lines.push_back(a.text);
  }
  std::string out;
  for (const auto& line : lines) {
    const auto seq = wordpiece::encode(line, vocab, a.max_length);
    if (run.json()) {
      ojson j;
      j["ids"] = seq.ids;
      j["attention_mask"] = seq.attention_mask;
      out += j.dump() + '\n';
    } else {
      std::string row;
      for (std::size_t i = 0; i < seq.ids.size(); ++i) {
        if (!seq.attention_mask[i]) break;
        if (i) row += ' ';
        row += vocab.token(seq.ids[i]);
      }
      out += row + '\n';
    }
  }
  emit(out, a.output);
  if (!a.output.empty()) run.output(a.output);
  run.finish(a.output);
}

// ---- probe benchmark ------------------------------------------------------

struct BenchArgs {
  std::string dataset, emb_a, emb_b, name_a = "model_a", name_b = "model_b", output;
  pipeline::BenchmarkConfig config;
  std::size_t per_class = 0;
};

void probe_benchmark(BenchArgs a, const Common& common) {
  Run run("probe benchmark", common);
  a.config.seed = common.seed;
  a.config.probe.seed = common.seed;
  if (a.per_class > 0) a.config.per_class = a.per_class;
  auto& c = run.config();
  c["dataset"] = a.dataset;
  c["embeddings"] = ojson::array({ojson{{"name", a.name_a}, {"path", a.emb_a}}});
  if (!a.emb_b.empty()) c["embeddings"].push_back({{"name", a.name_b}, {"path", a.emb_b}});
  c["epochs"] = a.config.probe.epochs;
  c["learning_rate"] = a.config.probe.learning_rate;
  c["batch_size"] = a.config.probe.batch_size;
  c["l2"] = a.config.probe.l2;
  c["train_fraction"] = a.config.train_fraction;
  c["per_class"] = a.per_class;
  c["normalize"] = a.config.normalize;

  const auto dataset = load_labeled_examples(a.dataset);
  run.input(a.dataset);
  std::vector<EmbeddingMatrix> matrices;
  matrices.push_back(load_any_embeddings(a.emb_a));
  run.input(a.emb_a);
  if (!a.emb_b.empty()) {
    matrices.push_back(load_any_embeddings(a.emb_b));
    run.input(a.emb_b);
  }
  std::vector<std::pair<std::string, const EmbeddingMatrix*>> sources{{a.name_a, &matrices[0]}};
  if (matrices.size() > 1) sources.emplace_back(a.name_b, &matrices[1]);

  const auto report = pipeline::run_benchmark(dataset, sources, a.config);
  const auto json = pipeline::to_json(report).dump(2) + "\n";
  if (!a.output.empty()) {
    write_file(a.output, json);
    run.output(a.output);
  }
  std::cout << (run.json() ? json : pipeline::format_table(report));
  run.finish(a.output);
}

// ---- cluster fit ----------------------------------------------------------

struct ClusterArgs {
  std::string embeddings, output;
  std::size_t k = 0, k_min = 2, k_max = 40;
  bool normalize = false;
  cluster::KMeansOptions kmeans;
};

void cluster_fit(const ClusterArgs& a, const Common& common) {
  Run run("cluster fit", common);
  auto& c = run.config();
  c["embeddings"] = a.embeddings;
  c["output"] = a.output;
  c["k"] = a.k;
  c["k_min"] = a.k_min;
  c["k_max"] = a.k_max;
  c["normalize"] = a.normalize;
  c["n_init"] = a.kmeans.n_init;
  c["max_iter"] = a.kmeans.max_iter;
  c["tol"] = a.kmeans.tol;

  auto x = sorted_by_id(load_any_embeddings(a.embeddings));
  run.input(a.embeddings);
  if (a.normalize) x = l2_normalized(x);
  cluster::ClusterModel model;
  std::vector<std::pair<std::size_t, double>> scores;
  if (a.k > 0) {
    model = cluster::fit_kmeans(x, a.k, common.seed, a.kmeans);
  } else {
    auto selection = cluster::select_k(x, a.k_min, a.k_max, common.seed, a.kmeans);
    model = std::move(selection.best_model);
    scores = std::move(selection.scores);
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < x.rows(); ++i) ids.push_back(x.id(i));
  auto j = ojson::parse(cluster::to_json(model, ids, -1));
  if (!scores.empty()) {
    auto& s = j["silhouette"] = ojson::array();
    for (const auto& [k, score] : scores) s.push_back({{"k", k}, {"score", score}});
  }
  const auto text = j.dump(2) + "\n";
  if (!a.output.empty()) {
    write_file(a.output, text);
    run.output(a.output);
  }
  if (run.json()) {
    std::cout << text;
  } else {
    std::printf("k = %zu, inertia = %.6f, iterations = %d\n", model.k, model.inertia, model.iterations);
    for (const auto& [k, score] : scores) std::printf("  silhouette k=%zu: %.4f\n", k, score);
    const auto pops = model.populations();
    for (std::size_t cl = 0; cl < pops.size(); ++cl) std::printf("  cluster %zu: %zu\n", cl, pops[cl]);
  }
  run.finish(a.output);
}

// ---- topics board ---------------------------------------------------------

struct BoardArgs {
  std::string annotations, embeddings, out_dir;
  std::size_t k = 0;
  pipeline::TopicPipelineOptions options;
};

void topics_board(BoardArgs a, const Common& common) {
  Run run("topics board", common);
  a.options.seed = common.seed;
  if (a.k > 0) a.options.k_min = a.options.k_max = a.k;
  auto& c = run.config();
  c["annotations"] = a.annotations;
  c["embeddings"] = a.embeddings;
  c["out_dir"] = a.out_dir;
  c["k_min"] = a.options.k_min;
  c["k_max"] = a.options.k_max;
  c["normalize"] = a.options.normalize;
  c["top_words"] = a.options.top_words;
  c["top_samples"] = a.options.top_samples;
  c["projection_fit"] = a.options.projection_fit == pipeline::ProjectionFit::kPoints ? "points" : "centroids";
  c["n_init"] = a.options.kmeans.n_init;
  c["max_iter"] = a.options.kmeans.max_iter;

  const auto records = load_annotations(a.annotations);
  run.input(a.annotations);
  const auto x = load_any_embeddings(a.embeddings);
  run.input(a.embeddings);
  const auto result = pipeline::run_topic_pipeline(records, x, a.options);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_file(dir / "board.json", topics::board_to_json(result.board, 2) + "\n");
  write_file(dir / "samples.json", pipeline::samples_to_json(result) + "\n");
  const auto table = topics::topic_table(result.topics);
  write_file(dir / "topics.txt", table);
  write_file(dir / "samples.txt", pipeline::topic_samples_table(result));
  for (const char* name : {"board.json", "samples.json", "topics.txt", "samples.txt"}) run.output(dir / name);

  if (run.json()) {
    std::cout << topics::board_to_json(result.board, 2) << '\n';
  } else {
    std::cout << "k = " << result.model().k << " (projection fitted on " << result.projection_fit << ")\n" << table;
  }
  run.finish(dir);
}

// ---- synonyms -------------------------------------------------------------

struct SynonymArgs {
  std::string vectors, output;
  std::vector<std::string> queries;
  std::size_t k = 8;
  std::size_t distribution_pairs = 0;
};

void synonyms(const SynonymArgs& a, const Common& common) {
  Run run("synonyms", common);
  auto& c = run.config();
  c["vectors"] = a.vectors;
  c["queries"] = a.queries;
  c["k"] = a.k;
  c["distribution_pairs"] = a.distribution_pairs;
  c["output"] = a.output;
  simsearch::WordVectorTable table(load_any_embeddings(a.vectors));
  run.input(a.vectors);

  ojson all = ojson::array();
  std::string text;
  for (const auto& q : a.queries) {
    const auto result = simsearch::top_k_similar(q, table, a.k);
    all.push_back(ojson::parse(simsearch::to_json(result, -1)));
    text += q + "\n";
    for (const auto& [word, score] : result.neighbors) {
      char line[256];
      std::snprintf(line, sizeof line, "  %-24s %.4f\n", word.c_str(), score);
      text += line;
    }
  }
  ojson doc{{"results", all}};
  if (a.distribution_pairs > 0) {
    const auto s = simsearch::similarity_distribution(table, a.distribution_pairs, common.seed);
    doc["distribution"] = {{"mean", s.mean}, {"sd", s.sd}, {"pairs", s.pairs}, {"histogram", s.histogram}};
    char line[128];
    std::snprintf(line, sizeof line, "random pairs: mean %.4f, sd %.4f over %zu pairs\n", s.mean, s.sd, s.pairs);
    text += line;
  }
  const auto json = doc.dump(2) + "\n";
  if (!a.output.empty()) {
    write_file(a.output, json);
    run.output(a.output);
  }
  std::cout << (run.json() ? json : text);
  run.finish(a.output);
}

// ---- study analyze --------------------------------------------------------

struct AnalyzeArgs {
  std::string pairs, responses, study, output;
  std::string label_a, label_b;
};

void study_analyze(const AnalyzeArgs& a, const Common& common) {
  Run run("study analyze", common);
  auto& c = run.config();
  c["pairs"] = a.pairs;
  c["responses"] = a.responses;
  c["study"] = a.study;
  c["output"] = a.output;

  stats::PairedSample sample;
  ojson extra;
  if (!a.pairs.empty()) {
    if (!a.responses.empty() || !a.study.empty()) {
      throw ValidationError("--pairs excludes --responses / --study");
    }
    sample = pipeline::load_pairs(a.pairs, a.label_a.empty() ? "model_a" : a.label_a,
                                  a.label_b.empty() ? "model_b" : a.label_b);
    run.input(a.pairs);
  } else {
    if (a.responses.empty() || a.study.empty()) {
      throw ValidationError("need --pairs, or both --responses and --study");
    }
    const auto config = study::load_study_config(a.study);
    run.input(a.study);
    const auto responses = study::read_response_log(a.responses);
    run.input(a.responses);
    auto summary = stats::summarize_study(responses, config.item_conditions(),
                                          a.label_a.empty() ? config.label_a : a.label_a,
                                          a.label_b.empty() ? config.label_b : a.label_b);
    sample = std::move(summary.sample);
    extra["participants"] = summary.participants.size();
    extra["excluded"] = summary.excluded;
  }
  c["label_a"] = sample.label_a;
  c["label_b"] = sample.label_b;

  const auto result = stats::paired_ttest(sample);
  std::string out;
  if (run.json()) {
    auto j = ojson::parse(stats::format_report_json(sample, result, -1));
    for (auto& [key, value] : extra.items()) j[key] = value;
    out = j.dump(2) + "\n";
  } else {
    out = stats::format_report_text(sample, result);
    if (extra.contains("excluded") && !extra["excluded"].empty()) {
      out += "excluded (incomplete): " + std::to_string(extra["excluded"].size()) + " participants\n";
    }
  }
  emit(out, a.output);
  if (!a.output.empty()) run.output(a.output);
  run.finish(a.output);
}

// ---- serve ----------------------------------------------------------------

struct ServeArgs {
  std::string data_dir, host = "127.0.0.1";
  int port = 8080;
};

void serve(const ServeArgs& a, const Common& common) {
  Run run("serve", common);
  run.config()["data_dir"] = a.data_dir;
  run.config()["host"] = a.host;
  run.config()["port"] = a.port;
  explorer::DataDir dir{a.data_dir};
  for (const auto& p : {dir.board(), dir.samples(), dir.study()}) {
    if (fs::exists(p)) run.input(p);
  }

  // Termination signals are taken by a dedicated thread so the server can be
  // stopped outside signal context.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  explorer::ExplorerServer server(dir);
  const int port = server.bind(a.host, a.port);
  run.config()["bound_port"] = port;
  run.finish(common.manifest.empty() ? dir.root / "serve" : fs::path());
  std::cout << "listening on " << a.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.serve();
  if (waiter.joinable()) {
    // serve() may also return on its own; wake the waiter in that case.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding evaluation workbench"};
  app.require_subcommand(1);
  Common common;

  auto* embed = app.add_subcommand("embed", "Embedding provider access");
  embed->require_subcommand(1);
  FetchArgs fetch;
  auto* fetch_cmd = embed->add_subcommand("fetch", "Embed texts through an HTTP provider");
  fetch_cmd->add_option("--input", fetch.input, "JSONL records or one sentence per line")->required();
  fetch_cmd->add_option("--output", fetch.output, "Embeddings file (.tsv or .jsonl)")->required();
  fetch_cmd->add_option("--endpoint", fetch.endpoint, "Provider URL")->envname(kEndpointEnv);
  fetch_cmd->add_option("--field", fetch.field, "JSONL text field")->capture_default_str();
  fetch_cmd->add_option("--batch-size", fetch.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  fetch_cmd->add_option("--max-attempts", fetch.max_attempts)->check(CLI::PositiveNumber)->capture_default_str();
  add_common(fetch_cmd, common, false);

  auto* prep = app.add_subcommand("prep", "Corpus preparation");
  prep->require_subcommand(1);
  SplitArgs split;
  auto* split_cmd = prep->add_subcommand("split", "Lowercase documents and split into sentences");
  split_cmd->add_option("--input", split.input, "Documents JSONL")->required();
  split_cmd->add_option("--output", split.output, "Sentence file")->required();
  split_cmd->add_option("--sidecar", split.sidecar, "line<TAB>doc_id file (default: <output>.docs.tsv)");
  add_common(split_cmd, common, false);

  auto* tok = app.add_subcommand("tokenizer", "WordPiece vocabulary");
  tok->require_subcommand(1);
  TrainArgs train;
  auto* train_cmd = tok->add_subcommand("train", "Train a vocabulary on a sentence file");
  train_cmd->add_option("--corpus", train.corpus)->required();
  train_cmd->add_option("--output", train.output, "Vocabulary file, one token per line")->required();
  train_cmd->add_option("--vocab-size", train.vocab_size)->capture_default_str();
  train_cmd->add_option("--min-frequency", train.min_frequency)->capture_default_str();
  add_common(train_cmd, common, true);
  EncodeArgs enc;
  auto* enc_cmd = tok->add_subcommand("encode", "Encode text with a vocabulary");
  enc_cmd->add_option("--vocab", enc.vocab)->required();
  auto* text_opt = enc_cmd->add_option("--text", enc.text);
  auto* input_opt = enc_cmd->add_option("--input", enc.input, "One text per line");
  text_opt->excludes(input_opt);
  enc_cmd->add_option("--max-length", enc.max_length)->capture_default_str();
  enc_cmd->add_option("--output", enc.output);
  add_common(enc_cmd, common, true);

  auto* probe_cmd = app.add_subcommand("probe", "Frozen-embedding probes");
  probe_cmd->require_subcommand(1);
  BenchArgs bench;
  auto* bench_cmd = probe_cmd->add_subcommand("benchmark", "Train and compare one probe per embedding source");
  bench_cmd->add_option("--dataset", bench.dataset, "Labeled JSONL")->required();
  bench_cmd->add_option("--embeddings-a", bench.emb_a)->required();
  bench_cmd->add_option("--embeddings-b", bench.emb_b);
  bench_cmd->add_option("--name-a", bench.name_a)->capture_default_str();
  bench_cmd->add_option("--name-b", bench.name_b)->capture_default_str();
  bench_cmd->add_option("--epochs", bench.config.probe.epochs)->capture_default_str();
  bench_cmd->add_option("--lr", bench.config.probe.learning_rate)->capture_default_str();
  bench_cmd->add_option("--batch-size", bench.config.probe.batch_size)->capture_default_str();
  bench_cmd->add_option("--l2", bench.config.probe.l2)->capture_default_str();
  bench_cmd->add_option("--train-fraction", bench.config.train_fraction)->capture_default_str();
  bench_cmd->add_option("--per-class", bench.per_class, "Balanced subsample size per class (0: all)");
  bench_cmd->add_flag("--normalize", bench.config.normalize, "L2-normalize rows");
  bench_cmd->add_option("--output", bench.output, "Report JSON path");
  add_common(bench_cmd, common, true);

  auto* cluster_cmd = app.add_subcommand("cluster", "k-means clustering");
  cluster_cmd->require_subcommand(1);
  ClusterArgs cl;
  auto* fit_cmd = cluster_cmd->add_subcommand("fit", "Fit k-means, choosing k by silhouette unless --k is set");
  fit_cmd->add_option("--embeddings", cl.embeddings)->required();
  fit_cmd->add_option("--k", cl.k);
  fit_cmd->add_option("--k-min", cl.k_min)->capture_default_str();
  fit_cmd->add_option("--k-max", cl.k_max)->capture_default_str();
  fit_cmd->add_option("--n-init", cl.kmeans.n_init)->capture_default_str();
  fit_cmd->add_option("--max-iter", cl.kmeans.max_iter)->capture_default_str();
  fit_cmd->add_flag("--normalize", cl.normalize, "L2-normalize rows");
  fit_cmd->add_option("--output", cl.output, "Model JSON path");
  add_common(fit_cmd, common, true);

  auto* topics_cmd = app.add_subcommand("topics", "Topic boards");
  topics_cmd->require_subcommand(1);
  BoardArgs board;
  auto* board_cmd = topics_cmd->add_subcommand("board", "Cluster annotations and export a topic board");
  board_cmd->add_option("--annotations", board.annotations)->required();
  board_cmd->add_option("--embeddings", board.embeddings)->required();
  board_cmd->add_option("--out-dir", board.out_dir)->required();
  board_cmd->add_option("--k", board.k, "Fixed k (overrides the range)");
  board_cmd->add_option("--k-min", board.options.k_min)->capture_default_str();
  board_cmd->add_option("--k-max", board.options.k_max)->capture_default_str();
  board_cmd->add_option("--n-init", board.options.kmeans.n_init)->capture_default_str();
  board_cmd->add_option("--top-words", board.options.top_words)->capture_default_str();
  board_cmd->add_option("--top-samples", board.options.top_samples)->capture_default_str();
  board_cmd->add_flag("--normalize", board.options.normalize, "L2-normalize rows");
  board_cmd->add_option("--projection-fit", board.options.projection_fit, "Rows the PCA axes are fitted on")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, pipeline::ProjectionFit>{{"centroids", pipeline::ProjectionFit::kCentroids},
                                                         {"points", pipeline::ProjectionFit::kPoints}}))
      ->capture_default_str();
  add_common(board_cmd, common, true);

  SynonymArgs syn;
  auto* syn_cmd = app.add_subcommand("synonyms", "Nearest words by cosine similarity");
  syn_cmd->add_option("--vectors", syn.vectors, "Word vectors (id = word)")->required();
  syn_cmd->add_option("--query", syn.queries)->required();
  syn_cmd->add_option("--k", syn.k)->capture_default_str();
  syn_cmd->add_option("--distribution", syn.distribution_pairs, "Also summarize N random word pairs");
  syn_cmd->add_option("--output", syn.output, "Results JSON path");
  add_common(syn_cmd, common, true);

  auto* study_cmd = app.add_subcommand("study", "Rating study");
  study_cmd->require_subcommand(1);
  AnalyzeArgs an;
  auto* an_cmd = study_cmd->add_subcommand("analyze", "Paired t-test over per-participant condition means");
  an_cmd->add_option("--pairs", an.pairs, "TSV participant<TAB>a<TAB>b");
  an_cmd->add_option("--responses", an.responses, "Response log JSONL");
  an_cmd->add_option("--study", an.study, "Study config JSON");
  an_cmd->add_option("--label-a", an.label_a);
  an_cmd->add_option("--label-b", an.label_b);
  an_cmd->add_option("--output", an.output);
  add_common(an_cmd, common, true);

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the explorer HTTP service");
  serve_cmd->add_option("--data-dir", sv.data_dir)->required();
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  add_common(serve_cmd, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fetch_cmd->parsed()) embed_fetch(fetch, common);
    else if (split_cmd->parsed()) prep_split(split, common);
    else if (train_cmd->parsed()) tokenizer_train(train, common);
    else if (enc_cmd->parsed()) {
      if (enc.input.empty() && enc.text.empty()) throw ValidationError("need --text or --input");
      tokenizer_encode(enc, common);
    } else if (bench_cmd->parsed()) probe_benchmark(bench, common);
    else if (fit_cmd->parsed()) cluster_fit(cl, common);
    else if (board_cmd->parsed()) topics_board(board, common);
    else if (syn_cmd->parsed()) synonyms(syn, common);
    else if (an_cmd->parsed()) study_analyze(an, common);
    else if (serve_cmd->parsed()) serve(sv, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
