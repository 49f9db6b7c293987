#include "embench/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "embench/error.hpp"
#include "embench/rng.hpp"

namespace embench {

using nlohmann::json;

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids,
                                 std::vector<double> values, std::size_t dim)
    : ids_(std::move(ids)), values_(std::move(values)), dim_(dim) {
  if (!ids_.empty() && dim_ == 0) {
    throw ValidationError("embedding dimension must be positive");
  }
  if (values_.size() != ids_.size() * dim_) {
    throw ValidationError("embedding storage holds " + std::to_string(values_.size()) +
                          " values, expected " + std::to_string(ids_.size() * dim_));
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw ValidationError("duplicate id " + ids_[i]);
    }
    for (double v : row(i)) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite component at " + ids_[i]);
      }
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::from_rows(std::vector<std::string> ids,
                                           const std::vector<std::vector<double>>& rows) {
  if (ids.size() != rows.size()) {
    throw ValidationError("id count does not match row count");
  }
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw ParseError("dimension mismatch at " + ids[i], ids[i]);
    }
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return EmbeddingMatrix(std::move(ids), std::move(values), dim);
}

std::optional<std::size_t> EmbeddingMatrix::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<double> values;
  ids.reserve(rows.size());
  values.reserve(rows.size() * dim_);
  for (std::size_t r : rows) {
    ids.push_back(ids_.at(r));
    auto v = row(r);
    values.insert(values.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix(std::move(ids), std::move(values), rows.empty() ? 0 : dim_);
}

EmbeddingFormat embedding_format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return EmbeddingFormat::kJsonl;
  return EmbeddingFormat::kTsv;
}

std::string format_component(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

double parse_number(std::string_view text, const std::string& id) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("invalid number '" + std::string(text) + "' at " + id, id);
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

// Accumulates rows while enforcing the matrix invariants with row-level
// messages.
struct MatrixBuilder {
  std::vector<std::string> ids;
  std::vector<double> values;
  std::set<std::string> seen;
  std::optional<std::size_t> dim;

  void add(std::string id, std::vector<double> row) {
    if (!seen.insert(id).second) throw ParseError("duplicate id " + id, id);
    if (row.empty()) throw ParseError("empty vector at " + id, id);
    if (!dim) dim = row.size();
    if (row.size() != *dim) throw ParseError("dimension mismatch at " + id, id);
    for (double v : row) {
      if (!std::isfinite(v)) throw ParseError("non-finite component at " + id, id);
    }
    ids.push_back(std::move(id));
    values.insert(values.end(), row.begin(), row.end());
  }

  EmbeddingMatrix finish() {
    return EmbeddingMatrix(std::move(ids), std::move(values), dim.value_or(0));
  }
};

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(line, number);
  }
}

json parse_json_line(const std::string& line, std::size_t number,
                     const std::filesystem::path& path) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ":" + std::to_string(number) + ": " + e.what());
  }
}

std::string require_string(const json& obj, const char* key, std::size_t number) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError("line " + std::to_string(number) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  MatrixBuilder builder;
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    if (format == EmbeddingFormat::kTsv) {
      auto fields = split_tabs(line);
      std::string id(fields.front());
      if (id.empty()) throw ParseError("empty id on line " + std::to_string(number));
      std::vector<double> row;
      row.reserve(fields.size() - 1);
      for (std::size_t i = 1; i < fields.size(); ++i) row.push_back(parse_number(fields[i], id));
      builder.add(std::move(id), std::move(row));
    } else {
      json obj = parse_json_line(line, number, path);
      if (!obj.is_object()) throw ParseError("line " + std::to_string(number) + ": expected object");
      std::string id = require_string(obj, "id", number);
      auto vec = obj.find("vector");
      if (vec == obj.end() || !vec->is_array()) {
        throw ParseError("missing vector at " + id, id);
      }
      std::vector<double> row;
      row.reserve(vec->size());
      for (const auto& v : *vec) {
        if (!v.is_number()) throw ParseError("non-numeric component at " + id, id);
        row.push_back(v.get<double>());
      }
      builder.add(std::move(id), std::move(row));
    }
  });
  return builder.finish();
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                     EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    const auto& id = matrix.id(i);
    if (format == EmbeddingFormat::kTsv) {
      if (id.find_first_of("\t\n") != std::string::npos) {
        throw ValidationError("id " + id + " cannot be written to TSV");
      }
      out << id;
      for (double v : matrix.row(i)) out << '\t' << format_component(v);
      out << '\n';
    } else {
      out << "{\"id\":" << json(id).dump() << ",\"vector\":[";
      bool first = true;
      for (double v : matrix.row(i)) {
        if (!first) out << ',';
        out << format_component(v);
        first = false;
      }
      out << "]}\n";
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

EmbeddingMatrix sorted_by_id(const EmbeddingMatrix& matrix) {
  std::vector<std::size_t> order(matrix.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return matrix.id(a) < matrix.id(b); });
  return matrix.select(order);
}

EmbeddingMatrix l2_normalized(const EmbeddingMatrix& matrix) {
  std::vector<double> values(matrix.values().begin(), matrix.values().end());
  const std::size_t d = matrix.dim();
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) norm += values[i * d + j] * values[i * d + j];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw NumericError("zero-norm vector at " + matrix.id(i));
    for (std::size_t j = 0; j < d; ++j) values[i * d + j] /= norm;
  }
  return EmbeddingMatrix(matrix.ids(), std::move(values), d);
}

std::vector<LabeledExample> load_labeled_examples(const std::filesystem::path& path) {
  std::vector<LabeledExample> out;
  std::set<std::string> seen;
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    json obj = parse_json_line(line, number, path);
    LabeledExample ex;
    ex.id = require_string(obj, "id", number);
    ex.text = obj.value("text", std::string());
    auto label = obj.find("label");
    if (label == obj.end() || !label->is_number_integer()) {
      throw ParseError("missing integer label at " + ex.id, ex.id);
    }
    ex.label = label->get<int>();
    if (!seen.insert(ex.id).second) throw ParseError("duplicate id " + ex.id, ex.id);
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  std::set<std::string> seen;
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    json obj = parse_json_line(line, number, path);
    AnnotationRecord rec;
    rec.id = require_string(obj, "id", number);
    rec.image_ref = obj.value("image_ref", std::string());
    rec.annotation_text = require_string(obj, "annotation_text", number);
    if (rec.annotation_text.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
      throw ParseError("empty annotation_text at " + rec.id, rec.id);
    }
    if (auto tags = obj.find("tags"); tags != obj.end() && tags->is_array()) {
      for (const auto& t : *tags) {
        if (t.is_string()) rec.tags.push_back(t.get<std::string>());
      }
    }
    if (!seen.insert(rec.id).second) throw ParseError("duplicate id " + rec.id, rec.id);
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<LabeledExample> balanced_sample(std::span<const LabeledExample> dataset,
                                            std::size_t per_class, std::uint64_t seed,
                                            std::span<const int> classes) {
  if (per_class == 0) throw ValidationError("per_class must be positive");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset[i].label].push_back(i);

  std::vector<int> wanted(classes.begin(), classes.end());
  if (wanted.empty()) {
    for (const auto& [label, rows] : by_class) wanted.push_back(label);
  }
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (int label : wanted) {
    auto it = by_class.find(label);
    const std::size_t available = it == by_class.end() ? 0 : it->second.size();
    if (available < per_class) {
      throw ValidationError("class " + std::to_string(label) + " has " +
                            std::to_string(available) + " examples, " +
                            std::to_string(per_class) + " requested");
    }
    auto& rows = it->second;
    // Partial Fisher-Yates: the first per_class slots become the sample.
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(rows.size() - i));
      std::swap(rows[i], rows[j]);
    }
    chosen.insert(chosen.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<LabeledExample> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(dataset[i]);
  return out;
}

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_endpoint(const std::string& endpoint) {
  const std::string prefix = "http://";
  if (endpoint.rfind(prefix, 0) != 0) {
    throw ValidationError("embedding endpoint must be an http:// URL: " + endpoint);
  }
  auto slash = endpoint.find('/', prefix.size());
  ParsedUrl url;
  if (slash == std::string::npos) {
    url.scheme_host_port = endpoint;
    url.path = "/";
  } else {
    url.scheme_host_port = endpoint.substr(0, slash);
    url.path = endpoint.substr(slash);
  }
  if (url.scheme_host_port.size() == prefix.size()) {
    throw ValidationError("embedding endpoint has no host: " + endpoint);
  }
  return url;
}

}  // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, HttpProviderOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  auto url = parse_endpoint(endpoint_);
  scheme_host_port_ = std::move(url.scheme_host_port);
  path_ = std::move(url.path);
  if (options_.max_attempts < 1) options_.max_attempts = 1;
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  json request = {{"texts", json::array()}};
  for (const auto& t : texts) request["texts"].push_back(t);
  const std::string body = request.dump();

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout_seconds, 0);
  client.set_read_timeout(options_.timeout_seconds, 0);

  std::string last_failure;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    auto res = client.Post(path_, body, "application/json");
    if (res && res->status == 200) {
      json reply;
      try {
        reply = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("embedding service returned invalid JSON: ") + e.what());
      }
      auto vectors = reply.find("vectors");
      if (!reply.is_object() || vectors == reply.end() || !vectors->is_array()) {
        throw ProtocolError("embedding service reply lacks a 'vectors' array");
      }
      std::vector<std::vector<double>> out;
      out.reserve(vectors->size());
      for (const auto& v : *vectors) {
        if (!v.is_array()) throw ProtocolError("embedding service vector is not an array");
        std::vector<double> row;
        row.reserve(v.size());
        for (const auto& x : v) {
          if (!x.is_number()) throw ProtocolError("embedding service vector has a non-number");
          row.push_back(x.get<double>());
        }
        out.push_back(std::move(row));
      }
      return out;
    }
    last_failure = res ? "HTTP " + std::to_string(res->status)
                       : httplib::to_string(res.error());
    if (attempt < options_.max_attempts && options_.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms * attempt));
    }
  }
  throw TransportError("embedding service " + endpoint_ + " failed after " +
                           std::to_string(options_.max_attempts) + " attempts: " + last_failure,
                       options_.max_attempts);
}

EmbeddingMatrix fetch_embeddings(std::span<const std::string> texts, EmbeddingProvider& provider,
                                 std::size_t batch_size, std::span<const std::string> ids) {
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!ids.empty() && ids.size() != texts.size()) {
    throw ValidationError("id count does not match text count");
  }
  std::vector<std::string> row_ids;
  row_ids.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    row_ids.push_back(ids.empty() ? std::to_string(i) : ids[i]);
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, texts.size() - start);
    auto batch = provider.embed(texts.subspan(start, count));
    if (batch.size() != count) {
      throw ProtocolError("embedding provider returned " + std::to_string(batch.size()) +
                          " vectors for " + std::to_string(count) + " texts");
    }
    for (auto& v : batch) {
      if (!rows.empty() && v.size() != rows.front().size()) {
        throw ProtocolError("embedding provider returned vectors of differing dimension");
      }
      if (v.empty()) throw ProtocolError("embedding provider returned an empty vector");
      rows.push_back(std::move(v));
    }
  }
  return EmbeddingMatrix::from_rows(std::move(row_ids), rows);
}

EmbeddingMatrix fetch_embeddings(std::span<const std::string> texts, const std::string& endpoint,
                                 std::size_t batch_size, std::span<const std::string> ids) {
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (texts.empty()) return {};
  HttpEmbeddingProvider provider(endpoint);
  return fetch_embeddings(texts, provider, batch_size, ids);
}

}  // namespace embench
