#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "embench/study.hpp"

namespace httplib {
class Server;
}

namespace embench::explorer {

// Layout of a service data directory:
//   board.json       published topic board, served verbatim
//   samples.json     {"clusters":[{"id":..,"samples":[{"id":..,"image_ref":..}]}]}
//   study.json       study configuration (optional)
//   responses.jsonl  append-only response log
//   ui/, images/     static files
struct DataDir {
  std::filesystem::path root;

  std::filesystem::path board() const { return root / "board.json"; }
  std::filesystem::path samples() const { return root / "samples.json"; }
  std::filesystem::path study() const { return root / "study.json"; }
  std::filesystem::path responses() const { return root / "responses.jsonl"; }
  std::filesystem::path ui() const { return root / "ui"; }
  std::filesystem::path images() const { return root / "images"; }
};

// JSON-over-HTTP front end for the topic board and the rating study.
class ExplorerServer {
 public:
  explicit ExplorerServer(DataDir dir);
  ~ExplorerServer();

  ExplorerServer(const ExplorerServer&) = delete;
  ExplorerServer& operator=(const ExplorerServer&) = delete;

  // Binds host:port (port 0 picks a free port). Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void serve();
  void stop();

  const study::StudyService* study_service() const noexcept { return study_.get(); }

 private:
  void install_routes();

  DataDir dir_;
  std::unique_ptr<study::StudyService> study_;
  std::unique_ptr<httplib::Server> server_;
};

// ETag derived from the payload bytes.
std::string content_etag(const std::string& body);

}  // namespace embench::explorer
