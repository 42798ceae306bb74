#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

namespace qsurr::tools {

struct ServiceConfig {
  std::string bind = "127.0.0.1";
  // 0 picks a free port.
  int port = 8080;
  std::filesystem::path data_dir = "qsurr-data";
  std::size_t max_fits = 1;
  // Empty disables authentication.
  std::string token;
  // Directory of static files served at /, empty for none.
  std::filesystem::path static_dir;
};

// Overrides fields from QSURR_BIND, QSURR_PORT, QSURR_DATA_DIR,
// QSURR_MAX_FITS, QSURR_TOKEN and QSURR_STATIC_DIR when they are set.
ServiceConfig apply_env(ServiceConfig config);

// HTTP front end over a directory of campaign files. Construction takes an
// exclusive lock on the directory and replays the event log.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread. Returns the bound port.
  int start();
  // Blocks until stop() is called from another thread or a handler.
  void wait();
  void stop();
  // Blocks until no suggestion job is running.
  void drain();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qsurr::tools
