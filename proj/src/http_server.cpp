#include "fairdiv/http_server.hpp"

#include <httplib.h>

#include <atomic>
#include <csignal>
#include <ostream>

namespace fairdiv {
namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const Json& details = Json::array()) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}, {"details", details}}}});
}

std::string token_of(const httplib::Request& req) {
  const std::string auth = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (auth.compare(0, prefix.size(), prefix) == 0) return auth.substr(prefix.size());
  if (req.has_param("as")) return req.get_param_value("as");
  return "";
}

Json body_of(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw ServiceError(400, "malformed-json", e.what());
  }
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Every route runs through here so service errors become JSON error bodies.
Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status, e.code, e.what(), e.details);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

std::atomic<ApiServer*> g_running{nullptr};

void on_signal(int) {
  if (ApiServer* s = g_running.load()) s->stop();
}

}  // namespace

struct ApiServer::Impl {
  MediationService& service;
  httplib::Server http;
};

ApiServer::ApiServer(MediationService& service) : impl_(new Impl{service, {}}) {
  auto& http = impl_->http;
  MediationService& svc = service;

  http.Post("/v1/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const CreatedSession created = svc.create_session(body_of(req));
    send_json(res, 201, {{"id", created.id},
                         {"mediator_token", created.mediator_token},
                         {"agent_tokens", created.agent_tokens}});
  }));
  http.Get("/v1/sessions/:id", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.summary(req.path_params.at("id"), token_of(req)));
  }));
  http.Post("/v1/sessions/:id/open", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    svc.open_session(id, token_of(req));
    send_json(res, 200, {{"id", id}, {"state", to_string(svc.state(id))}});
  }));
  http.Post("/v1/sessions/:id/submissions",
            guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              send_json(res, 201, svc.submit(req.path_params.at("id"), token_of(req), body_of(req)));
            }));
  http.Post("/v1/sessions/:id/solve", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.solve(req.path_params.at("id"), token_of(req)));
  }));
  http.Get("/v1/sessions/:id/report", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.report(req.path_params.at("id"), token_of(req)));
  }));
  http.Get("/v1/cases", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, svc.list_cases());
  }));
  http.Get("/v1/cases/:id", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.get_case(req.path_params.at("id")));
  }));
  http.Post("/v1/solve-adhoc", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.solve_adhoc(body_of(req)));
  }));
  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "not-found", "no such endpoint");
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen() { return impl_->http.listen_after_bind(); }
void ApiServer::stop() { impl_->http.stop(); }
void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

int run_server(const ServerConfig& config, std::ostream& log) {
  ServiceOptions options;
  options.default_k = config.default_k;
  options.tol = config.tol;
  options.cases_dir = config.cases_dir;
  MediationService service(config.data_dir, options);
  ApiServer server(service);
  const int port = server.bind(config.host, config.port);
  if (port < 0) {
    log << "cannot bind " << config.host << ":" << config.port << "\n";
    return 1;
  }
  log << "listening on http://" << config.host << ":" << port << " (" << service.session_ids().size()
      << " sessions restored from " << config.data_dir << ")\n";
  log.flush();
  g_running = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const bool ok = server.listen();
  g_running = nullptr;
  return ok ? 0 : 1;
}

}  // namespace fairdiv
