#include "embench/topics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

#include "embench/error.hpp"
#include "embench/textprep.hpp"

namespace embench::topics {

using ojson = nlohmann::ordered_json;

Projection pca_project(const EmbeddingMatrix& x, std::size_t dims) {
  if (dims != 2 && dims != 3) throw ValidationError("PCA projects to 2 or 3 dimensions");
  const std::size_t n = x.rows();
  const std::size_t d = x.dim();
  if (n <= dims) {
    throw ValidationError("PCA to " + std::to_string(dims) + " dimensions needs more than " +
                          std::to_string(dims) + " rows, got " + std::to_string(n));
  }
  if (d < dims) throw ValidationError("input dimension is smaller than the projection dimension");

  Eigen::MatrixXd data(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  const Eigen::MatrixXd cov = (data.transpose() * data) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  Projection proj;
  proj.dims = dims;
  proj.input_dim = d;
  proj.mean.assign(mean.data(), mean.data() + d);
  double trace = 0.0;
  for (std::size_t q = 0; q < d; ++q) {
    const double v = std::max(0.0, values(static_cast<Eigen::Index>(d - 1 - q)));
    proj.eigenvalues.push_back(v);
    trace += v;
  }
  if (!(trace > 0.0) || trace <= 1e-300) throw NumericError("PCA input has zero variance");

  proj.components.resize(dims * d);
  for (std::size_t c = 0; c < dims; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - c);
    Eigen::VectorXd axis = vectors.col(col);
    axis.normalize();
    // Sign convention: the first loading of (near-)maximal magnitude is positive.
    const double peak = axis.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < axis.size(); ++j) {
      if (std::abs(axis(j)) >= peak - 1e-12) {
        if (axis(j) < 0.0) axis = -axis;
        break;
      }
    }
    for (std::size_t j = 0; j < d; ++j) proj.components[c * d + j] = axis(static_cast<Eigen::Index>(j));
    proj.explained_variance_ratio.push_back(proj.eigenvalues[c] / trace);
  }
  proj.coords = proj.transform(x);
  return proj;
}

std::vector<double> Projection::transform(const EmbeddingMatrix& x) const {
  if (x.dim() != input_dim) throw ValidationError("projection input dimension mismatch");
  std::vector<double> out(x.rows() * dims, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t c = 0; c < dims; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < input_dim; ++j) s += (r[j] - mean[j]) * components[c * input_dim + j];
      out[i * dims + c] = s;
    }
  }
  return out;
}

std::vector<double> Projection::reconstruct() const {
  const std::size_t n = coords.size() / dims;
  std::vector<double> out(n * input_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < input_dim; ++j) {
      double s = mean[j];
      for (std::size_t c = 0; c < dims; ++c) s += coords[i * dims + c] * components[c * input_dim + j];
      out[i * input_dim + j] = s;
    }
  }
  return out;
}

std::vector<std::string> annotation_terms(const AnnotationRecord& record) {
  const std::string text = fold_case(record.annotation_text);
  const auto words = split_whitespace(text);
  std::vector<std::string> terms;
  terms.reserve(words.size());
  for (auto w : words) terms.emplace_back(w);

  std::set<std::pair<std::string, std::string>> bigrams;
  for (const auto& tag : record.tags) {
    const std::string folded = fold_case(tag);
    const auto parts = split_whitespace(folded);
    if (parts.size() == 2) bigrams.emplace(std::string(parts[0]), std::string(parts[1]));
  }
  for (const auto& [first, second] : bigrams) {
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
      if (words[i] == first && words[i + 1] == second) terms.push_back(first + " " + second);
    }
  }
  return terms;
}

std::vector<TopicSummary> topic_word_stats(std::span<const AnnotationRecord> records,
                                           std::span<const int> assignments, std::size_t k,
                                           std::size_t top_n) {
  if (records.size() != assignments.size()) {
    throw ValidationError("annotation count does not match assignment count");
  }
  std::map<std::string, std::size_t> overall;
  std::vector<std::map<std::string, std::size_t>> within(k);
  std::vector<TopicSummary> out(k);
  for (std::size_t t = 0; t < k; ++t) out[t].topic_id = static_cast<int>(t);

  for (std::size_t i = 0; i < records.size(); ++i) {
    const int a = assignments[i];
    if (a < 0 || static_cast<std::size_t>(a) >= k) {
      throw ValidationError("cluster index " + std::to_string(a) + " outside [0, " + std::to_string(k) + ")");
    }
    ++out[static_cast<std::size_t>(a)].population;
    for (auto& term : annotation_terms(records[i])) {
      ++overall[term];
      ++within[static_cast<std::size_t>(a)][term];
    }
  }
  for (std::size_t t = 0; t < k; ++t) {
    auto& words = out[t].top_words;
    for (const auto& [term, count] : within[t]) words.push_back({term, count, overall[term]});
    std::stable_sort(words.begin(), words.end(), [](const TopicWord& a, const TopicWord& b) {
      if (a.within != b.within) return a.within > b.within;
      return a.term < b.term;
    });
    if (words.size() > top_n) words.resize(top_n);
  }
  return out;
}

BoardPayload build_board(const cluster::ClusterModel& model, const Projection& centroid_projection,
                         std::span<const TopicSummary> topics) {
  if (topics.size() != model.k) {
    throw ValidationError("board has " + std::to_string(topics.size()) + " topics for k = " +
                          std::to_string(model.k));
  }
  if (centroid_projection.coords.size() != model.k * centroid_projection.dims ||
      centroid_projection.dims < 2) {
    throw ValidationError("centroid projection does not cover the k cluster centers");
  }
  const auto populations = model.populations();
  std::size_t max_pop = 0;
  for (std::size_t t = 0; t < model.k; ++t) {
    if (topics[t].topic_id != static_cast<int>(t)) {
      throw ValidationError("topic id " + std::to_string(topics[t].topic_id) + " at position " +
                            std::to_string(t) + " does not match its cluster index");
    }
    if (topics[t].population != populations[t]) {
      throw ValidationError("topic " + std::to_string(t) + " population disagrees with the cluster model");
    }
    max_pop = std::max(max_pop, populations[t]);
  }
  const double scale = max_pop > 0 ? 1.0 / static_cast<double>(max_pop) : 0.0;

  BoardPayload board;
  board.k = model.k;
  for (std::size_t t = 0; t < model.k; ++t) {
    BoardTopic entry;
    entry.id = static_cast<int>(t);
    auto xy = centroid_projection.coord(t);
    entry.x = xy[0];
    entry.y = xy[1];
    entry.population = populations[t];
    entry.radius = scale * static_cast<double>(populations[t]);
    entry.words = topics[t].top_words;
    board.topics.push_back(std::move(entry));
  }
  ojson meta;
  meta["radius_rule"] = "radius = radius_scale * population";
  meta["radius_scale"] = scale;
  meta["projection"] = "pca";
  meta["explained_variance_ratio"] = centroid_projection.explained_variance_ratio;
  meta["bar_values"] = "raw counts";
  board.meta_json = meta.dump();
  return board;
}

std::string board_to_json(const BoardPayload& board, int indent) {
  ojson j;
  j["k"] = board.k;
  auto& topics = j["topics"] = ojson::array();
  for (const auto& t : board.topics) {
    ojson entry;
    entry["id"] = t.id;
    entry["x"] = t.x;
    entry["y"] = t.y;
    entry["population"] = t.population;
    entry["radius"] = t.radius;
    auto& words = entry["words"] = ojson::array();
    for (const auto& w : t.words) words.push_back({{"term", w.term}, {"within", w.within}, {"overall", w.overall}});
    topics.push_back(std::move(entry));
  }
  j["meta"] = ojson::parse(board.meta_json);
  return j.dump(indent);
}

BoardPayload board_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("board payload is not JSON: ") + e.what());
  }
  try {
    BoardPayload board;
    board.k = j.at("k").get<std::size_t>();
    for (const auto& t : j.at("topics")) {
      BoardTopic entry;
      entry.id = t.at("id").get<int>();
      entry.x = t.at("x").get<double>();
      entry.y = t.at("y").get<double>();
      entry.population = t.at("population").get<std::size_t>();
      entry.radius = t.value("radius", 0.0);
      for (const auto& w : t.at("words")) {
        entry.words.push_back({w.at("term").get<std::string>(), w.at("within").get<std::size_t>(),
                               w.at("overall").get<std::size_t>()});
      }
      board.topics.push_back(std::move(entry));
    }
    board.meta_json = j.contains("meta") ? j["meta"].dump() : "{}";
    if (board.topics.size() != board.k) throw ParseError("board k does not match its topic count");
    return board;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("board payload violates the schema: ") + e.what());
  }
}

std::string topic_table(std::span<const TopicSummary> topics) {
  std::string out;
  for (const auto& t : topics) {
    out += std::to_string(t.topic_id);
    out += '\t';
    for (std::size_t i = 0; i < t.top_words.size(); ++i) {
      if (i) out += ", ";
      out += t.top_words[i].term;
    }
    out += '\n';
  }
  return out;
}

}  // namespace embench::topics
