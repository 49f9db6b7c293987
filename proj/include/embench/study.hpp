#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "embench/stats.hpp"

namespace embench::study {

struct StudyItem {
  std::string item_id;
  stats::Condition condition = stats::Condition::kModelA;
  int cluster_id = 0;
  std::vector<std::string> image_refs;  // at most kMaxImages
};

inline constexpr std::size_t kMaxImages = 10;

struct StudyConfig {
  std::string study_id = "study";
  std::uint64_t seed = 0;
  std::string label_a = "model_a";
  std::string label_b = "model_b";
  std::vector<StudyItem> items;

  std::map<std::string, stats::Condition> item_conditions() const;
};

StudyConfig load_study_config(const std::filesystem::path& path);
StudyConfig parse_study_config(const std::string& text);
std::string to_json(const StudyConfig& config, int indent = 2);

// The item a participant sees, without its condition.
struct ServedItem {
  const StudyItem* item = nullptr;
  std::size_t position = 0;  // 0-based index within the participant's order
  std::size_t total = 0;
};

// Sequencing and durable storage of Likert responses. Each participant gets a
// seeded permutation of the items in which conditions alternate; responses
// are appended (and fsynced) to a JSON Lines log before they are
// acknowledged, and the log is replayed on construction.
class StudyService {
 public:
  StudyService(StudyConfig config, std::filesystem::path log_path);

  const StudyConfig& config() const noexcept { return config_; }
  const std::filesystem::path& log_path() const noexcept { return log_path_; }

  // Item order for a participant (indices into config().items).
  std::vector<std::size_t> participant_order(const std::string& participant_id) const;

  // The first unanswered item of the participant's order; nullopt when done.
  std::optional<ServedItem> next_item(const std::string& participant_id) const;

  // Validates and durably records a rating for the participant's pending item.
  // Throws ValidationError (bad rating or id), NotFoundError (unknown item),
  // ConflictError (already answered, or not the pending item).
  stats::StudyResponse submit(const std::string& participant_id, const std::string& item_id, int rating);

  std::vector<stats::StudyResponse> responses() const;

  // Paired statistics once at least two participants rated both conditions.
  std::optional<stats::StudySummary> summary() const;

  // Bytes dropped from an incomplete final log line during replay.
  std::size_t recovered_torn_bytes() const noexcept { return torn_bytes_; }

 private:
  void replay();
  void append_durably(const std::string& line);
  void record(stats::StudyResponse response);

  StudyConfig config_;
  std::filesystem::path log_path_;
  std::unordered_map<std::string, std::size_t> item_index_;
  mutable std::shared_mutex mutex_;
  std::vector<stats::StudyResponse> responses_;
  std::unordered_map<std::string, std::set<std::size_t>> answered_;
  std::size_t torn_bytes_ = 0;
};

std::string to_json(const stats::StudyResponse& response);
stats::StudyResponse response_from_json(const std::string& line);

// Reads a response log; an incomplete final line is ignored.
std::vector<stats::StudyResponse> read_response_log(const std::filesystem::path& path);

}  // namespace embench::study
