#pragma once

#include "fairdiv/service.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace fairdiv {

struct ServerConfig {
  std::string data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cases_dir;
  double default_k = AppreciationFactor::kDefault;
  double tol = 1e-9;
};

/// The /v1 JSON API over a MediationService.
class ApiServer {
 public:
  ApiServer(MediationService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Serves until the process is interrupted. Returns a process exit code.
int run_server(const ServerConfig& config, std::ostream& log);

}  // namespace fairdiv
