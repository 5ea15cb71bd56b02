#include "fairdiv/service.hpp"

#include "fairdiv/case_corpus.hpp"
#include "fairdiv/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

namespace fairdiv {
namespace {

namespace fs = std::filesystem;

std::string random_hex(std::size_t bytes) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t k = 0; k < bytes; ++k) {
    const auto b = static_cast<unsigned>(rng() & 0xffu);
    out += digits[b >> 4];
    out += digits[b & 0xfu];
  }
  return out;
}

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SessionKind kind_from_string(const std::string& s) {
  if (s == "fix-your-own-price") return SessionKind::FixYourOwnPrice;
  if (s == "price-and-rate") return SessionKind::PriceAndRate;
  throw FormatError("unknown session kind '" + s + "'");
}

Json report_to_json(const ValidationReport& r) {
  Json out{{"violations", Json::array()}, {"warnings", Json::array()}};
  for (const auto& v : r.violations) out["violations"].push_back({{"code", v.code}, {"message", v.message}});
  for (const auto& v : r.warnings) out["warnings"].push_back({{"code", v.code}, {"message", v.message}});
  return out;
}

ServiceError not_found(const std::string& what) { return ServiceError(404, "not-found", what); }
ServiceError forbidden() { return ServiceError(403, "unauthorized", "token does not grant access"); }
ServiceError wrong_state(const Session& s, const std::string& action) {
  return ServiceError(409, "wrong-state",
                      "cannot " + action + " a session in state '" + to_string(s.state) + "'");
}

// "mediator", an agent id, or empty for an unknown token.
std::string role_of(const Session& s, const std::string& token) {
  if (token.empty()) return "";
  if (token == s.mediator_token) return "mediator";
  for (const auto& [agent, t] : s.agent_tokens)
    if (t == token) return agent;
  return "";
}

Json with_explanations(const CaseResult& r) {
  Json j = result_to_json(r);
  if (r.prices) {
    Json ex = Json::array();
    for (const auto& a : purchase_explanation(r.problem, *r.prices).agents)
      ex.push_back(explanation_to_json(r.problem, a));
    j["explanations"] = ex;
  }
  return j;
}

}  // namespace

std::string to_string(SessionKind k) {
  return k == SessionKind::FixYourOwnPrice ? "fix-your-own-price" : "price-and-rate";
}

std::string to_string(SessionState s) {
  switch (s) {
    case SessionState::Setup: return "setup";
    case SessionState::Collecting: return "collecting";
    case SessionState::Solved: return "solved";
  }
  return "unknown";
}

MediationService::MediationService(std::string data_dir, ServiceOptions options)
    : data_dir_(std::move(data_dir)), options_(std::move(options)) {
  fs::create_directories(data_dir_);
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(data_dir_))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) replay(path.string());
}

void MediationService::replay(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  auto entry = std::make_shared<Entry>();
  bool created = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json event = Json::parse(line);
    apply(entry->session, event);
    created = created || event.at("event") == "created";
  }
  if (created) sessions_[entry->session.id] = entry;
}

void MediationService::apply(Session& s, const Json& event) const {
  const std::string type = event.at("event").get<std::string>();
  if (type == "created") {
    const Json& j = event.at("session");
    s.id = j.at("id").get<std::string>();
    s.kind = kind_from_string(j.at("kind").get<std::string>());
    s.setup = case_from_json(j.at("setup"));
    s.ranges_visible = j.at("ranges_visible").get<bool>();
    s.mediator_token = j.at("mediator_token").get<std::string>();
    s.agent_tokens = j.at("agent_tokens").get<std::map<std::string, std::string>>();
    s.state = SessionState::Setup;
  } else if (type == "opened") {
    s.state = SessionState::Collecting;
  } else if (type == "submitted") {
    Submission sub;
    sub.agent_id = event.at("agent").get<std::string>();
    sub.sheet = event.at("sheet");
    sub.received_at = event.at("at").get<std::string>();
    sub.scaled = event.value("scaled", false);
    s.submissions[sub.agent_id] = sub;
  } else if (type == "solved") {
    s.result = event.at("result");
    s.state = SessionState::Solved;
  }
}

void MediationService::append_event(const std::string& id, const Json& event) const {
  std::ofstream out(fs::path(data_dir_) / (id + ".jsonl"), std::ios::app);
  if (!out) throw ServiceError(500, "storage", "cannot write the session log");
  out << event.dump() << '\n';
  out.flush();
}

std::shared_ptr<MediationService::Entry> MediationService::find(const std::string& id) const {
  std::lock_guard lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw not_found("unknown session '" + id + "'");
  return it->second;
}

CreatedSession MediationService::create_session(const Json& config) {
  Json errors = Json::array();
  auto field_error = [&](const std::string& field, const std::string& message) {
    errors.push_back({{"field", field}, {"message", message}});
  };
  if (!config.is_object()) throw ServiceError(400, "invalid-config", "config must be an object");

  SessionKind kind = SessionKind::FixYourOwnPrice;
  try {
    kind = kind_from_string(config.value("kind", std::string()));
  } catch (const FormatError& e) {
    field_error("kind", e.what());
  }

  Json case_json = config;
  for (const char* key : {"kind", "bids", "ratings", "ranges_visible"}) case_json.erase(key);
  case_json["procedure"] = kind == SessionKind::FixYourOwnPrice ? "nash" : "egalitarian";
  CaseFile setup;
  try {
    setup = case_from_json(case_json);
  } catch (const Error& e) {
    field_error("goods/agents", e.what());
  }

  if (errors.empty()) {
    if (setup.goods.empty()) field_error("goods", "at least one good is required");
    if (setup.agents.empty()) field_error("agents", "at least one agent is required");
    std::set<std::string> ids;
    for (const auto& a : setup.agents) {
      if (!ids.insert("agent:" + a.id).second) field_error("agents", "duplicate agent id '" + a.id + "'");
      if (!(a.weight > 0.0)) field_error("agents", "weight of '" + a.id + "' must be positive");
    }
    for (const auto& g : setup.goods)
      if (!ids.insert("good:" + g.id).second) field_error("goods", "duplicate good id '" + g.id + "'");
    if (kind == SessionKind::FixYourOwnPrice) {
      if (!setup.budget || !(*setup.budget > 0.0)) field_error("budget", "a positive budget is required");
      if (!setup.ranges.empty() && setup.ranges.size() != setup.goods.size())
        field_error("ranges", "one range per good is required");
    } else {
      for (const auto& g : setup.goods)
        if (!g.market_value || !(*g.market_value >= 0.0))
          field_error("goods", "good '" + g.id + "' needs a non-negative market value");
      if (!setup.k) setup.k = options_.default_k;
      try {
        AppreciationFactor check(*setup.k);
      } catch (const RatingError& e) {
        field_error("K", e.what());
      }
    }
  }
  if (!errors.empty()) throw ServiceError(400, "invalid-config", "invalid session config", errors);

  auto entry = std::make_shared<Entry>();
  Session& s = entry->session;
  s.id = random_hex(8);
  s.kind = kind;
  s.setup = setup;
  s.ranges_visible = config.value("ranges_visible", false);
  s.mediator_token = random_hex(16);
  for (const auto& a : setup.agents) s.agent_tokens[a.id] = random_hex(16);

  const Json event{{"event", "created"},
                   {"at", now_utc()},
                   {"session",
                    {{"id", s.id},
                     {"kind", to_string(kind)},
                     {"setup", case_to_json(setup)},
                     {"ranges_visible", s.ranges_visible},
                     {"mediator_token", s.mediator_token},
                     {"agent_tokens", s.agent_tokens}}}};
  append_event(s.id, event);
  {
    std::lock_guard lock(map_mutex_);
    sessions_[s.id] = entry;
  }
  return {s.id, s.mediator_token, s.agent_tokens};
}

void MediationService::open_session(const std::string& id, const std::string& token) {
  auto entry = find(id);
  std::unique_lock lock(entry->mutex);
  Session& s = entry->session;
  if (role_of(s, token) != "mediator") throw forbidden();
  if (s.state != SessionState::Setup) throw wrong_state(s, "open");
  const Json event{{"event", "opened"}, {"at", now_utc()}};
  append_event(id, event);
  apply(s, event);
}

Json MediationService::submit(const std::string& id, const std::string& token, const Json& body) {
  auto entry = find(id);
  std::unique_lock lock(entry->mutex);
  Session& s = entry->session;
  const std::string agent = role_of(s, token);
  if (agent.empty() || agent == "mediator") throw forbidden();
  if (s.state != SessionState::Collecting) throw wrong_state(s, "submit to");
  if (s.submissions.count(agent))
    throw ServiceError(409, "duplicate-submission", "agent '" + agent + "' has already submitted");
  if (!body.is_object()) throw ServiceError(400, "invalid-submission", "submission must be an object");

  Json sheet;
  bool scaled = false;
  ValidationReport report;
  try {
    if (s.kind == SessionKind::FixYourOwnPrice) {
      BidSheet bids;
      bids.agent_id = agent;
      bids.budget = *s.setup.budget;
      for (const auto& b : body.at("bids")) bids.bids.push_back(parse_money(b));
      if (body.value("scale_to_budget", false) &&
          std::abs(bids.total() - bids.budget) > kBudgetRelTol * bids.budget) {
        bids = scale_bids_to_budget(bids, bids.budget);
        scaled = true;
      }
      report = validate_bids(bids, s.setup.ranges, bids.budget);
      if (bids.bids.size() != s.setup.goods.size() && report.ok())
        report.violations.push_back({"dimension-mismatch", "one bid per good is required"});
      sheet["bids"] = Json::array();
      for (double b : bids.bids) sheet["bids"].push_back(format_money(b));
    } else {
      RatingSheet ratings;
      ratings.agent_id = agent;
      for (const auto& r : body.at("ratings")) {
        if (!r.is_number()) throw FormatError("ratings must be numbers");
        ratings.ratings.push_back(r.get<double>());
      }
      report = validate_ratings(ratings, s.setup.goods.size(), s.setup.fractional_ratings);
      sheet["ratings"] = ratings.ratings;
    }
  } catch (const Json::exception& e) {
    throw ServiceError(400, "invalid-submission", e.what());
  } catch (const ScalingError& e) {
    throw ServiceError(422, "rejected", e.what());
  } catch (const FormatError& e) {
    throw ServiceError(400, "invalid-submission", e.what());
  }
  if (!report.ok()) throw ServiceError(422, "rejected", "submission rejected", report_to_json(report));

  const Json event{{"event", "submitted"}, {"at", now_utc()}, {"agent", agent}, {"sheet", sheet}, {"scaled", scaled}};
  append_event(id, event);
  apply(s, event);
  return {{"accepted", true}, {"scaled", scaled}, {"sheet", sheet}, {"report", report_to_json(report)}};
}

CaseFile MediationService::case_of(const Session& s) const {
  CaseFile c = s.setup;
  for (const auto& a : c.agents) {
    const Json& sheet = s.submissions.at(a.id).sheet;
    if (s.kind == SessionKind::FixYourOwnPrice) {
      BidSheet b;
      b.agent_id = a.id;
      b.budget = *c.budget;
      for (const auto& v : sheet.at("bids")) b.bids.push_back(parse_money(v));
      c.bids.push_back(b);
    } else {
      c.ratings.push_back({a.id, sheet.at("ratings").get<std::vector<double>>()});
    }
  }
  return c;
}

Json MediationService::compute_result(const Session& s) const {
  SolveOptions options;
  options.tol = options_.tol;
  options.max_iter = options_.max_iter;
  return with_explanations(solve_case(case_of(s), options));
}

Json MediationService::solve(const std::string& id, const std::string& token) {
  auto entry = find(id);
  std::unique_lock lock(entry->mutex);
  Session& s = entry->session;
  if (role_of(s, token) != "mediator") throw forbidden();
  if (s.state != SessionState::Collecting) throw wrong_state(s, "solve");
  Json missing = Json::array();
  for (const auto& a : s.setup.agents)
    if (!s.submissions.count(a.id)) missing.push_back(a.id);
  if (!missing.empty())
    throw ServiceError(409, "missing-submissions", "not every agent has submitted", missing);

  Json result;
  try {
    result = compute_result(s);
  } catch (const ValidationFailed& e) {
    throw ServiceError(422, "invalid-inputs", e.what(), report_to_json(e.report));
  } catch (const Error& e) {
    throw ServiceError(422, "solver-error", e.what());
  }
  const Json event{{"event", "solved"}, {"at", now_utc()}, {"result", result}};
  append_event(id, event);
  apply(s, event);
  return result;
}

Json MediationService::summary(const std::string& id, const std::string& token) const {
  auto entry = find(id);
  std::shared_lock lock(entry->mutex);
  const Session& s = entry->session;
  const std::string role = role_of(s, token);
  if (role.empty()) throw forbidden();
  Json setup = case_to_json(s.setup);
  if (role != "mediator" && !s.ranges_visible) setup.erase("ranges");
  setup.erase("procedure");
  Json roster = Json::array();
  for (const auto& a : s.setup.agents)
    roster.push_back({{"id", a.id}, {"label", a.label}, {"weight", a.weight}, {"submitted", s.submissions.count(a.id) > 0}});
  return {{"id", s.id},
          {"kind", to_string(s.kind)},
          {"state", to_string(s.state)},
          {"role", role == "mediator" ? "mediator" : "agent"},
          {"setup", setup},
          {"ranges_visible", s.ranges_visible},
          {"roster", roster}};
}

Json MediationService::report(const std::string& id, const std::string& token) const {
  auto entry = find(id);
  std::shared_lock lock(entry->mutex);
  const Session& s = entry->session;
  const std::string role = role_of(s, token);
  if (role.empty()) throw forbidden();

  if (role == "mediator") {
    Json submissions = Json::object();
    for (const auto& [agent, sub] : s.submissions)
      submissions[agent] = {{"sheet", sub.sheet}, {"received_at", sub.received_at}, {"scaled", sub.scaled}};
    return {{"role", "mediator"},
            {"state", to_string(s.state)},
            {"setup", case_to_json(s.setup)},
            {"submissions", submissions},
            {"result", s.result ? *s.result : Json(nullptr)}};
  }

  Json view{{"role", "agent"}, {"agent", role}, {"state", to_string(s.state)}};
  const auto own = s.submissions.find(role);
  view["own_sheet"] = own != s.submissions.end() ? own->second.sheet : Json(nullptr);
  if (s.state != SessionState::Solved || !s.result) {
    view["status"] = "pending";
    return view;
  }
  view["status"] = "solved";
  const Json& r = *s.result;
  const auto& agent_ids = r.at("allocation").at("agents");
  std::size_t row = 0;
  while (row < agent_ids.size() && agent_ids[row] != role) ++row;

  Json bundle = Json::object();
  const auto& goods = r.at("allocation").at("goods");
  for (std::size_t g = 0; g < goods.size(); ++g)
    bundle[goods[g].get<std::string>()] = r.at("allocation").at("shares")[row][g];
  view["bundle"] = bundle;

  // Own valuation of every bundle, keyed by the bundle's holder.
  Json valuations = Json::object();
  const auto& envy_row = r.at("audit").at("envy_matrix")[row];
  for (std::size_t j = 0; j < agent_ids.size(); ++j) valuations[agent_ids[j].get<std::string>()] = envy_row[j];
  view["valuations"] = valuations;
  view["envy_free"] = std::none_of(r.at("audit").at("envious_pairs").begin(),
                                   r.at("audit").at("envious_pairs").end(),
                                   [&](const Json& p) { return p[0] == role; });
  view["fair_share"] = r.at("audit").at("fair_share")[row];
  if (!r.at("prices").is_null()) {
    view["prices"] = r.at("prices").at("scaled");
    view["discounts"] = r.at("explanations")[row];
  }
  if (r.contains("metrics")) view["metrics"] = r.at("metrics")[row];
  return view;
}

Json MediationService::list_cases() const {
  const std::string dir = options_.cases_dir.empty() ? default_cases_dir() : options_.cases_dir;
  Json out = Json::array();
  for (const auto& id : fairdiv::list_cases(dir)) {
    const CaseFixture f = load_case(id, dir);
    out.push_back({{"id", id},
                   {"procedure", to_string(f.input.procedure)},
                   {"agents", f.input.agents.size()},
                   {"goods", f.input.goods.size()}});
  }
  return out;
}

Json MediationService::get_case(const std::string& case_id) const {
  const std::string dir = options_.cases_dir.empty() ? default_cases_dir() : options_.cases_dir;
  try {
    return case_to_json(load_case(case_id, dir).input);
  } catch (const LookupError& e) {
    throw not_found(e.what());
  }
}

Json MediationService::solve_adhoc(const Json& body) const {
  const Json& case_json = body.contains("case") ? body.at("case") : body;
  SolveOptions options;
  options.tol = options_.tol;
  options.max_iter = options_.max_iter;
  try {
    if (body.contains("case") && body.contains("procedure"))
      options.procedure = procedure_from_string(body.at("procedure").get<std::string>());
    return with_explanations(solve_case(case_from_json(case_json), options));
  } catch (const ValidationFailed& e) {
    throw ServiceError(400, "invalid-case", e.what(), report_to_json(e.report));
  } catch (const ConvergenceError& e) {
    throw ServiceError(422, "solver-error", e.what());
  } catch (const Json::exception& e) {
    throw ServiceError(400, "invalid-case", e.what());
  } catch (const Error& e) {
    throw ServiceError(400, "invalid-case", e.what());
  }
}

std::vector<std::string> MediationService::session_ids() const {
  std::lock_guard lock(map_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, entry] : sessions_) ids.push_back(id);
  return ids;
}

SessionState MediationService::state(const std::string& id) const {
  auto entry = find(id);
  std::shared_lock lock(entry->mutex);
  return entry->session.state;
}

bool MediationService::resolve_matches_stored(const std::string& id) const {
  auto entry = find(id);
  std::shared_lock lock(entry->mutex);
  const Session& s = entry->session;
  if (!s.result) return false;
  return compute_result(s).dump() == s.result->dump();
}

}  // namespace fairdiv
