#include "embench/study.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "embench/error.hpp"
#include "embench/rng.hpp"

namespace embench::study {

using ojson = nlohmann::ordered_json;

std::map<std::string, stats::Condition> StudyConfig::item_conditions() const {
  std::map<std::string, stats::Condition> out;
  for (const auto& item : items) out.emplace(item.item_id, item.condition);
  return out;
}

StudyConfig parse_study_config(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("study config is not JSON: ") + e.what());
  }
  StudyConfig config;
  try {
    config.study_id = j.value("study_id", std::string("study"));
    config.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("labels")) {
      config.label_a = j["labels"].value("model_a", config.label_a);
      config.label_b = j["labels"].value("model_b", config.label_b);
    }
    std::set<std::string> seen;
    for (const auto& it : j.at("items")) {
      StudyItem item;
      item.item_id = it.at("item_id").get<std::string>();
      item.condition = stats::condition_from_string(it.at("condition").get<std::string>());
      item.cluster_id = it.value("cluster_id", 0);
      if (it.contains("image_refs")) item.image_refs = it["image_refs"].get<std::vector<std::string>>();
      if (item.image_refs.size() > kMaxImages) {
        throw ValidationError("study item " + item.item_id + " has more than 10 images");
      }
      if (!seen.insert(item.item_id).second) throw ValidationError("duplicate study item " + item.item_id);
      config.items.push_back(std::move(item));
    }
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("study config violates the schema: ") + e.what());
  }
  if (config.items.empty()) throw ValidationError("study has no items");
  return config;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_study_config(text);
}

std::string to_json(const StudyConfig& config, int indent) {
  ojson j;
  j["study_id"] = config.study_id;
  j["seed"] = config.seed;
  j["labels"] = {{"model_a", config.label_a}, {"model_b", config.label_b}};
  auto& items = j["items"] = ojson::array();
  for (const auto& item : config.items) {
    items.push_back({{"item_id", item.item_id},
                     {"condition", stats::to_string(item.condition)},
                     {"cluster_id", item.cluster_id},
                     {"image_refs", item.image_refs}});
  }
  return j.dump(indent);
}

std::string to_json(const stats::StudyResponse& r) {
  ojson j;
  j["participant_id"] = r.participant_id;
  j["item_id"] = r.item_id;
  j["rating"] = r.rating;
  j["received_at"] = r.received_at;
  return j.dump();
}

stats::StudyResponse response_from_json(const std::string& line) {
  try {
    auto j = ojson::parse(line);
    stats::StudyResponse r;
    r.participant_id = j.at("participant_id").get<std::string>();
    r.item_id = j.at("item_id").get<std::string>();
    r.rating = j.at("rating").get<int>();
    r.received_at = j.value("received_at", std::string());
    return r;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("malformed response record: ") + e.what());
  }
}

namespace {

// Complete lines of the log and the byte length they cover.
std::pair<std::vector<std::string>, std::size_t> read_complete_lines(const std::filesystem::path& path,
                                                                     std::size_t* total_bytes) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> lines;
  std::size_t good = 0;
  *total_bytes = 0;
  if (!in) return {lines, good};
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  *total_bytes = data.size();
  std::size_t start = 0;
  while (true) {
    auto nl = data.find('\n', start);
    if (nl == std::string::npos) break;
    if (nl > start) lines.push_back(data.substr(start, nl - start));
    start = nl + 1;
    good = start;
  }
  return {lines, good};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace

std::vector<stats::StudyResponse> read_response_log(const std::filesystem::path& path) {
  std::size_t total = 0;
  auto [lines, good] = read_complete_lines(path, &total);
  std::vector<stats::StudyResponse> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(response_from_json(line));
  return out;
}

StudyService::StudyService(StudyConfig config, std::filesystem::path log_path)
    : config_(std::move(config)), log_path_(std::move(log_path)) {
  for (std::size_t i = 0; i < config_.items.size(); ++i) item_index_.emplace(config_.items[i].item_id, i);
  replay();
}

void StudyService::replay() {
  std::size_t total = 0;
  auto [lines, good] = read_complete_lines(log_path_, &total);
  if (good < total) {
    // A crash mid-append leaves an unacknowledged partial line; drop it.
    torn_bytes_ = total - good;
    std::filesystem::resize_file(log_path_, good);
  }
  for (const auto& line : lines) {
    auto r = response_from_json(line);
    auto it = item_index_.find(r.item_id);
    if (it == item_index_.end()) throw ParseError("response log references unknown item " + r.item_id);
    if (answered_[r.participant_id].count(it->second)) continue;
    record(std::move(r));
  }
}

void StudyService::record(stats::StudyResponse response) {
  answered_[response.participant_id].insert(item_index_.at(response.item_id));
  responses_.push_back(std::move(response));
}

std::vector<std::size_t> StudyService::participant_order(const std::string& participant_id) const {
  const std::uint64_t seed = fnv1a64(participant_id, fnv1a64(config_.study_id + '\x1f')) ^ config_.seed;
  Rng rng(seed);
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < config_.items.size(); ++i) {
    (config_.items[i].condition == stats::Condition::kModelA ? a : b).push_back(i);
  }
  rng.shuffle(a);
  rng.shuffle(b);
  bool take_a = rng.uniform_index(2) == 0;
  std::vector<std::size_t> order;
  order.reserve(config_.items.size());
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    if ((take_a && ia < a.size()) || ib == b.size()) {
      order.push_back(a[ia++]);
    } else {
      order.push_back(b[ib++]);
    }
    take_a = !take_a;
  }
  return order;
}

std::optional<ServedItem> StudyService::next_item(const std::string& participant_id) const {
  if (participant_id.empty()) throw ValidationError("participant id is required");
  const auto order = participant_order(participant_id);
  std::shared_lock lock(mutex_);
  auto it = answered_.find(participant_id);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (it != answered_.end() && it->second.count(order[pos])) continue;
    return ServedItem{&config_.items[order[pos]], pos, order.size()};
  }
  return std::nullopt;
}

void StudyService::append_durably(const std::string& line) {
  const int fd = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot open response log " + log_path_.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw IoError("cannot append to response log: " + std::string(std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    const int err = errno;
    ::close(fd);
    throw IoError("fsync of response log failed: " + std::string(std::strerror(err)));
  }
  ::close(fd);
}

stats::StudyResponse StudyService::submit(const std::string& participant_id, const std::string& item_id,
                                          int rating) {
  if (participant_id.empty()) throw ValidationError("participant id is required");
  if (rating < stats::kMinRating || rating > stats::kMaxRating) {
    throw ValidationError("rating " + std::to_string(rating) + " outside 1..7");
  }
  auto item = item_index_.find(item_id);
  if (item == item_index_.end()) throw NotFoundError("unknown study item '" + item_id + "'");
  const auto order = participant_order(participant_id);

  std::unique_lock lock(mutex_);
  auto& done = answered_[participant_id];
  if (done.count(item->second)) {
    throw ConflictError("participant " + participant_id + " already rated item " + item_id);
  }
  for (auto idx : order) {
    if (done.count(idx)) continue;
    if (idx != item->second) {
      throw ConflictError("item " + item_id + " is not the pending item for participant " + participant_id);
    }
    break;
  }
  stats::StudyResponse response{participant_id, item_id, rating, utc_now()};
  append_durably(to_json(response) + "\n");
  record(response);
  return response;
}

std::vector<stats::StudyResponse> StudyService::responses() const {
  std::shared_lock lock(mutex_);
  return responses_;
}

std::optional<stats::StudySummary> StudyService::summary() const {
  const auto snapshot = responses();
  std::map<std::string, std::set<stats::Condition>> seen;
  const auto conditions = config_.item_conditions();
  for (const auto& r : snapshot) seen[r.participant_id].insert(conditions.at(r.item_id));
  std::size_t complete = 0;
  for (const auto& [participant, conds] : seen) complete += conds.size() == 2 ? 1 : 0;
  if (complete < 2) return std::nullopt;
  return stats::summarize_study(snapshot, conditions, config_.label_a, config_.label_b);
}

}  // namespace embench::study
