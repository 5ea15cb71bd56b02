#pragma once

#include "fairdiv/case_io.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace fairdiv {

enum class SessionKind { FixYourOwnPrice, PriceAndRate };
enum class SessionState { Setup, Collecting, Solved };

std::string to_string(SessionKind k);
std::string to_string(SessionState s);

// Service errors map one-to-one onto HTTP statuses.
struct ServiceError : Error {
  ServiceError(int status, std::string code, const std::string& what, Json details = Json::array())
      : Error(what), status(status), code(std::move(code)), details(std::move(details)) {}
  int status;
  std::string code;
  Json details;
};

struct ServiceOptions {
  double default_k = AppreciationFactor::kDefault;
  double tol = 1e-9;
  int max_iter = 200000;
  std::string cases_dir;  // empty: the bundled corpus
};

struct Submission {
  std::string agent_id;
  Json sheet;  // {"bids": [...]} or {"ratings": [...]}, as accepted
  std::string received_at;
  bool scaled = false;
};

struct Session {
  std::string id;
  SessionKind kind = SessionKind::FixYourOwnPrice;
  CaseFile setup;  // goods, agents, budget, K, ranges; no sheets
  bool ranges_visible = false;
  SessionState state = SessionState::Setup;
  std::string mediator_token;
  std::map<std::string, std::string> agent_tokens;  // agent id -> token
  std::map<std::string, Submission> submissions;
  std::optional<Json> result;
};

struct CreatedSession {
  std::string id;
  std::string mediator_token;
  std::map<std::string, std::string> agent_tokens;
};

/// Sessions persisted as one append-only JSON-lines event log per session in
/// `data_dir`; logs are replayed on construction.
class MediationService {
 public:
  explicit MediationService(std::string data_dir, ServiceOptions options = {});

  CreatedSession create_session(const Json& config);
  void open_session(const std::string& id, const std::string& token);
  Json submit(const std::string& id, const std::string& token, const Json& body);
  Json solve(const std::string& id, const std::string& token);
  Json report(const std::string& id, const std::string& token) const;
  Json summary(const std::string& id, const std::string& token) const;

  Json list_cases() const;
  Json get_case(const std::string& case_id) const;
  /// Stateless solve of an uploaded case file; nothing is persisted.
  Json solve_adhoc(const Json& body) const;

  std::vector<std::string> session_ids() const;
  SessionState state(const std::string& id) const;
  /// Re-solves the stored inputs and compares with the stored result byte for byte.
  bool resolve_matches_stored(const std::string& id) const;

  const std::string& data_dir() const { return data_dir_; }

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    Session session;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void append_event(const std::string& id, const Json& event) const;
  void replay(const std::string& path);
  void apply(Session& s, const Json& event) const;
  CaseFile case_of(const Session& s) const;
  Json compute_result(const Session& s) const;

  std::string data_dir_;
  ServiceOptions options_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace fairdiv
