#include "embench/explorer.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>

#include <httplib.h>
#include <json.hpp>

#include "embench/error.hpp"
#include "embench/rng.hpp"

namespace embench::explorer {

using ojson = nlohmann::ordered_json;

std::string content_etag(const std::string& body) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "\"fnv1a64-%016llx\"", static_cast<unsigned long long>(fnv1a64(body)));
  return buf;
}

namespace {

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void send_json(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& reason) {
  send_json(res, status, {{"error", code}, {"reason", reason}});
}

// Maps library errors to HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const ConflictError& e) {
    send_error(res, 409, "conflict", e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, "validation", e.what());
  } catch (const NumericError& e) {
    send_error(res, 422, "numeric", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

ojson stats_json(const stats::StudySummary& summary, const stats::PairedStats& s) {
  ojson j = ojson::parse(stats::format_report_json(summary.sample, s, -1));
  j["available"] = true;
  j["complete_participants"] = summary.participants.size();
  j["excluded_participants"] = summary.excluded.size();
  auto& per = j["participants"] = ojson::array();
  for (std::size_t i = 0; i < summary.participants.size(); ++i) {
    per.push_back({{"participant_id", summary.participants[i]},
                   {"mean_a", summary.sample.a[i]},
                   {"mean_b", summary.sample.b[i]}});
  }
  return j;
}

}  // namespace

ExplorerServer::ExplorerServer(DataDir dir) : dir_(std::move(dir)), server_(std::make_unique<httplib::Server>()) {
  if (std::filesystem::exists(dir_.study())) {
    study_ = std::make_unique<study::StudyService>(study::load_study_config(dir_.study()), dir_.responses());
  }
  install_routes();
}

ExplorerServer::~ExplorerServer() { stop(); }

int ExplorerServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ExplorerServer::serve() { server_->listen_after_bind(); }

void ExplorerServer::stop() {
  if (server_) server_->stop();
}

void ExplorerServer::install_routes() {
  auto& srv = *server_;

  srv.Get("/api/board", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = read_file(dir_.board());
    if (!body) {
      send_error(res, 404, "not_found", "no board published");
      return;
    }
    const auto etag = content_etag(*body);
    res.set_header("ETag", etag);
    res.set_header("Cache-Control", "no-cache");
    if (req.get_header_value("If-None-Match") == etag) {
      res.status = 304;
      return;
    }
    res.status = 200;
    res.set_content(*body, "application/json");
  });

  srv.Get(R"(/api/clusters/(-?\d+)/samples)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = read_file(dir_.samples());
      if (!body) throw NotFoundError("no cluster samples published");
      const int id = std::stoi(req.matches[1]);
      auto j = ojson::parse(*body);
      for (const auto& c : j.at("clusters")) {
        if (c.at("id").get<int>() == id) {
          send_json(res, 200, c);
          return;
        }
      }
      throw NotFoundError("unknown cluster " + std::to_string(id));
    });
  });

  auto require_study = [this](const httplib::Request& req) -> study::StudyService& {
    if (!study_) throw NotFoundError("no study configured");
    if (req.has_param("study") && req.get_param_value("study") != study_->config().study_id) {
      throw NotFoundError("unknown study '" + req.get_param_value("study") + "'");
    }
    return *study_;
  };

  srv.Get("/api/study/next", [require_study](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto& svc = require_study(req);
      const auto participant = req.get_param_value("participant");
      auto next = svc.next_item(participant);
      if (!next) {
        send_json(res, 200, {{"done", true}});
        return;
      }
      // The condition is never sent to clients.
      send_json(res, 200,
                {{"done", false},
                 {"item", {{"item_id", next->item->item_id},
                           {"image_refs", next->item->image_refs},
                           {"position", next->position},
                           {"total", next->total}}}});
    });
  });

  srv.Post("/api/study/response", [require_study](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto& svc = require_study(req);
      ojson body;
      try {
        body = ojson::parse(req.body);
      } catch (const ojson::parse_error&) {
        throw ValidationError("request body is not JSON");
      }
      if (!body.is_object() || !body.contains("participant_id") || !body["participant_id"].is_string() ||
          !body.contains("item_id") || !body["item_id"].is_string() || !body.contains("rating") ||
          !body["rating"].is_number_integer()) {
        throw ValidationError("expected {participant_id: string, item_id: string, rating: integer}");
      }
      auto stored = svc.submit(body["participant_id"].get<std::string>(), body["item_id"].get<std::string>(),
                               body["rating"].get<int>());
      send_json(res, 200,
                {{"status", "stored"},
                 {"participant_id", stored.participant_id},
                 {"item_id", stored.item_id},
                 {"rating", stored.rating},
                 {"received_at", stored.received_at}});
    });
  });

  srv.Get("/api/study/summary", [require_study](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto& svc = require_study(req);
      auto summary = svc.summary();
      if (!summary) {
        send_json(res, 200, {{"available", false}, {"reason", "fewer than 2 complete participants"}});
        return;
      }
      try {
        const auto s = stats::paired_ttest(summary->sample);
        send_json(res, 200, stats_json(*summary, s));
      } catch (const NumericError& e) {
        send_json(res, 200,
                  {{"available", false},
                   {"reason", e.what()},
                   {"complete_participants", summary->participants.size()}});
      }
    });
  });

  if (std::filesystem::is_directory(dir_.images())) srv.set_mount_point("/images", dir_.images().string());
  if (std::filesystem::is_directory(dir_.ui())) srv.set_mount_point("/", dir_.ui().string());
}

}  // namespace embench::explorer
