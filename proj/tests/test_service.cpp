#include "doctest.h"

#include "fairdiv/case_corpus.hpp"
#include "fairdiv/http_server.hpp"
#include "fairdiv/service.hpp"

#include <httplib.h>

#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <thread>

using namespace fairdiv;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("fairdiv_svc_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

Json session_config(const std::string& case_id, const std::string& kind) {
  Json j = case_to_json(load_case(case_id).input);
  j.erase("bids");
  j.erase("ratings");
  j.erase("procedure");
  j["kind"] = kind;
  j["ranges_visible"] = false;
  return j;
}

Json sheet_body(const CaseFile& c, std::size_t agent) {
  if (c.has_bids()) {
    Json bids = Json::array();
    for (double b : c.bids[agent].bids) bids.push_back(format_money(b));
    return {{"bids", bids}};
  }
  return {{"ratings", c.ratings[agent].ratings}};
}

int status_of(const std::function<void()>& call) {
  try {
    call();
  } catch (const ServiceError& e) {
    return e.status;
  }
  return 0;
}

// Every scalar leaf of a payload, as a number where it parses as one.
void collect_numbers(const Json& j, std::vector<double>& out) {
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_string()) {
    try {
      out.push_back(parse_money(j));
    } catch (const FormatError&) {
    }
  } else if (j.is_structured()) {
    for (const auto& v : j) collect_numbers(v, out);
  }
}

struct InheritanceSession {
  CreatedSession created;
  CaseFile input = load_case("inheritance").input;

  explicit InheritanceSession(MediationService& svc) {
    created = svc.create_session(session_config("inheritance", "fix-your-own-price"));
    svc.open_session(created.id, created.mediator_token);
    for (std::size_t i = 0; i < input.agents.size(); ++i)
      svc.submit(created.id, created.agent_tokens.at(input.agents[i].id), sheet_body(input, i));
  }
  const std::string& token(const std::string& agent) const { return created.agent_tokens.at(agent); }
};

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("config validation") {
    TempDir dir("config");
    MediationService svc(dir.str());
    Json bad_k = session_config("warhol", "price-and-rate");
    bad_k["K"] = 0.9;
    try {
      svc.create_session(bad_k);
      FAIL("expected rejection");
    } catch (const ServiceError& e) {
      CHECK(e.status == 400);
      CHECK(e.details.dump().find("appreciation factor must exceed 1") != std::string::npos);
    }

    Json default_k = session_config("warhol", "price-and-rate");
    default_k.erase("K");
    const auto created = svc.create_session(default_k);
    CHECK(svc.state(created.id) == SessionState::Setup);
    CHECK(svc.summary(created.id, created.mediator_token)["setup"]["K"] == 1.1);

    Json no_budget = session_config("inheritance", "fix-your-own-price");
    no_budget.erase("budget");
    CHECK(status_of([&] { svc.create_session(no_budget); }) == 400);
    Json bad_kind = no_budget;
    bad_kind["kind"] = "auction";
    CHECK(status_of([&] { svc.create_session(bad_kind); }) == 400);
    CHECK(status_of([&] { svc.create_session(Json::array()); }) == 400);
  }

  TEST_CASE("inheritance session end to end") {
    TempDir dir("inheritance");
    MediationService svc(dir.str());
    InheritanceSession s(svc);
    const auto& id = s.created.id;
    const Json result = svc.solve(id, s.created.mediator_token);
    CHECK(svc.state(id) == SessionState::Solved);

    const double table5[] = {174, 113, 133, 93.5, 74.5, 42};
    for (int a = 0; a < 6; ++a) CHECK(std::abs(parse_money(result["prices"]["scaled"][a]) - table5[a]) <= 0.5);
    CHECK(result["allocation"]["shares"][1][1].get<double>() == doctest::Approx(0.68).epsilon(0.01));
    CHECK(result["explanations"].size() == 3);

    // Submissions are frozen after the solve.
    CHECK(status_of([&] { svc.submit(id, s.token("A"), sheet_body(s.input, 0)); }) == 409);
    CHECK(status_of([&] { svc.solve(id, s.created.mediator_token); }) == 409);
  }

  TEST_CASE("submission errors") {
    TempDir dir("errors");
    MediationService svc(dir.str());
    const auto created = svc.create_session(session_config("inheritance", "fix-your-own-price"));
    const auto& id = created.id;
    const CaseFile input = load_case("inheritance").input;
    const std::string a = created.agent_tokens.at("A");

    CHECK(status_of([&] { svc.submit(id, a, sheet_body(input, 0)); }) == 409);  // still in setup
    CHECK(status_of([&] { svc.open_session(id, a); }) == 403);
    svc.open_session(id, created.mediator_token);
    CHECK(status_of([&] { svc.open_session(id, created.mediator_token); }) == 409);
    CHECK(status_of([&] { svc.submit("nope", a, sheet_body(input, 0)); }) == 404);
    CHECK(status_of([&] { svc.submit(id, "forged", sheet_body(input, 0)); }) == 403);
    CHECK(status_of([&] { svc.submit(id, created.mediator_token, sheet_body(input, 0)); }) == 403);

    Json low = sheet_body(input, 0);
    low["bids"][0] = "100";
    try {
      svc.submit(id, a, low);
      FAIL("expected rejection");
    } catch (const ServiceError& e) {
      CHECK(e.status == 422);
      CHECK(e.details.dump().find("below-range") != std::string::npos);
    }

    svc.submit(id, a, sheet_body(input, 0));
    CHECK(status_of([&] { svc.submit(id, a, sheet_body(input, 0)); }) == 409);

    // 700k of bids with the scale request lands on 630k.
    Json big = Json::array();
    for (double b : input.bids[1].bids) big.push_back(format_money(b * 700.0 / 630.0));
    const Json accepted = svc.submit(id, created.agent_tokens.at("B"), {{"bids", big}, {"scale_to_budget", true}});
    CHECK(accepted["scaled"] == true);
    double total = 0.0;
    for (const auto& b : accepted["sheet"]["bids"]) total += parse_money(b);
    CHECK(total == doctest::Approx(630.0).epsilon(1e-12));

    try {
      svc.solve(id, created.mediator_token);
      FAIL("expected a state error");
    } catch (const ServiceError& e) {
      CHECK(e.status == 409);
      CHECK(e.details == Json::array({"C"}));
    }
    CHECK(status_of([&] { svc.submit(id, created.agent_tokens.at("C"), {{"bids", "many"}}); }) == 400);
  }

  TEST_CASE("rating sessions") {
    TempDir dir("warhol");
    MediationService svc(dir.str());
    const auto created = svc.create_session(session_config("warhol", "price-and-rate"));
    const CaseFile input = load_case("warhol").input;
    svc.open_session(created.id, created.mediator_token);
    CHECK(status_of([&] {
            svc.submit(created.id, created.agent_tokens.at("A"), {{"ratings", {6, 5, 1, 1}}});
          }) == 422);
    CHECK(status_of([&] {
            svc.submit(created.id, created.agent_tokens.at("A"), {{"ratings", {4.5, 5, 1, 1}}});
          }) == 422);
    for (std::size_t i = 0; i < 2; ++i)
      svc.submit(created.id, created.agent_tokens.at(input.agents[i].id), sheet_body(input, i));
    const Json result = svc.solve(created.id, created.mediator_token);
    CHECK(result["prices"].is_null());
    CHECK(parse_money(result["utilities"][0]) == doctest::Approx(222.82).epsilon(1e-4));
    const auto& metrics = result["metrics"];
    const double mu0 = parse_money(metrics[0]["market_value"]);
    CHECK((std::abs(mu0 - 184.15) <= 0.01 * 184.15 || std::abs(mu0 - 215.85) <= 0.01 * 215.85));
  }

  TEST_CASE("agent views are private") {
    TempDir dir("privacy");
    MediationService svc(dir.str());
    InheritanceSession s(svc);
    const auto& id = s.created.id;

    const Json pending = svc.report(id, s.token("A"));
    CHECK(pending["status"] == "pending");
    CHECK_FALSE(pending.contains("bundle"));
    CHECK(status_of([&] { svc.report(id, "stranger"); }) == 403);

    svc.solve(id, s.created.mediator_token);
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string agent = s.input.agents[i].id;
      CAPTURE(agent);
      const Json view = svc.report(id, s.token(agent));
      CHECK(view["agent"] == agent);
      CHECK(view["valuations"].size() == 3);
      CHECK(view["discounts"]["agent"] == agent);
      for (const char* hidden : {"result", "submissions", "setup", "utilities", "allocation"})
        CHECK_FALSE(view.contains(hidden));

      std::set<double> own(s.input.bids[i].bids.begin(), s.input.bids[i].bids.end());
      std::vector<double> numbers;
      collect_numbers(view, numbers);
      for (std::size_t j = 0; j < 3; ++j) {
        if (j == i) continue;
        for (double foreign : s.input.bids[j].bids) {
          if (own.count(foreign)) continue;
          CHECK_MESSAGE(std::find(numbers.begin(), numbers.end(), foreign) == numbers.end(),
                        "foreign bid " << foreign << " leaked");
        }
      }
    }
    const Json a = svc.report(id, s.token("A"));
    CHECK(parse_money(a["valuations"]["A"]) == doctest::Approx(225));

    const Json mediator = svc.report(id, s.created.mediator_token);
    CHECK(mediator["submissions"].size() == 3);
    CHECK(mediator["result"]["audit"]["envy_pass"] == true);

    // Ranges are hidden from agents unless the mediator discloses them.
    CHECK_FALSE(svc.summary(id, s.token("B"))["setup"].contains("ranges"));
    CHECK(svc.summary(id, s.created.mediator_token)["setup"].contains("ranges"));
  }

  TEST_CASE("state machine never moves backward") {
    const CaseFile input = load_case("inheritance").input;
    std::mt19937_64 rng(99);
    for (int run = 0; run < 40; ++run) {
      TempDir dir("fsm");
      MediationService svc(dir.str());
      const auto created = svc.create_session(session_config("inheritance", "fix-your-own-price"));
      int last = static_cast<int>(svc.state(created.id));
      std::vector<std::string> tokens{created.mediator_token, "bogus"};
      for (const auto& [agent, token] : created.agent_tokens) tokens.push_back(token);
      for (int step = 0; step < 30; ++step) {
        const std::string& token = tokens[rng() % tokens.size()];
        const std::size_t agent = rng() % 3;
        try {
          switch (rng() % 5) {
            case 0: svc.open_session(created.id, token); break;
            case 1: svc.submit(created.id, token, sheet_body(input, agent)); break;
            case 2: svc.solve(created.id, token); break;
            case 3: svc.report(created.id, token); break;
            default: svc.submit(created.id, token, {{"bids", {"1"}}}); break;
          }
        } catch (const ServiceError&) {
        }
        const int now = static_cast<int>(svc.state(created.id));
        CHECK(now >= last);
        last = now;
      }
    }
  }

  TEST_CASE("restart replays logs and re-solves identically") {
    TempDir dir("restart");
    std::string solved_id, open_id;
    Json stored;
    {
      MediationService svc(dir.str());
      InheritanceSession s(svc);
      solved_id = s.created.id;
      stored = svc.solve(solved_id, s.created.mediator_token);
      const auto other = svc.create_session(session_config("warhol", "price-and-rate"));
      svc.open_session(other.id, other.mediator_token);
      open_id = other.id;
    }
    MediationService again(dir.str());
    CHECK(again.session_ids().size() == 2);
    CHECK(again.state(solved_id) == SessionState::Solved);
    CHECK(again.state(open_id) == SessionState::Collecting);
    CHECK(again.resolve_matches_stored(solved_id));
    CHECK_FALSE(again.resolve_matches_stored(open_id));
  }

  TEST_CASE("sessions solve concurrently") {
    TempDir dir("threads");
    MediationService svc(dir.str());
    std::vector<std::unique_ptr<InheritanceSession>> sessions;
    for (int k = 0; k < 4; ++k) sessions.push_back(std::make_unique<InheritanceSession>(svc));
    std::vector<std::thread> threads;
    std::vector<std::string> results(sessions.size());
    for (std::size_t k = 0; k < sessions.size(); ++k)
      threads.emplace_back([&, k] {
        results[k] = svc.solve(sessions[k]->created.id, sessions[k]->created.mediator_token).dump();
      });
    for (auto& t : threads) t.join();
    for (const auto& r : results) CHECK(r == results[0]);
  }

  TEST_CASE("corpus and ad-hoc endpoints") {
    TempDir dir("adhoc");
    MediationService svc(dir.str());
    CHECK(svc.list_cases().size() == 4);
    CHECK(svc.get_case("warhol")["K"] == 1.1);
    CHECK(status_of([&] { svc.get_case("nope"); }) == 404);

    const Json warhol = case_to_json(load_case("warhol").input);
    const Json direct = svc.solve_adhoc(warhol);
    CHECK(direct["procedure"] == "egalitarian");
    const Json overridden = svc.solve_adhoc({{"case", warhol}, {"procedure", "nash"}});
    CHECK(overridden["non_default_pairing"] == true);
    CHECK(svc.session_ids().empty());

    Json bad = warhol;
    bad["ratings"]["A"][0] = 9;
    CHECK(status_of([&] { svc.solve_adhoc(bad); }) == 400);
  }
}

TEST_CASE("http api") {
  TempDir dir("http");
  MediationService svc(dir.str());
  ApiServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto post = [&](const std::string& path, const Json& body, const std::string& token = "") {
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    return client.Post(path, headers, body.dump(), "application/json");
  };

  auto created = post("/v1/sessions", session_config("inheritance", "fix-your-own-price"));
  REQUIRE(created);
  CHECK(created->status == 201);
  const Json ids = Json::parse(created->body);
  const std::string id = ids["id"], mediator = ids["mediator_token"];
  const std::string base = "/v1/sessions/" + id;

  CHECK(post(base + "/open", Json::object(), mediator)->status == 200);
  const CaseFile input = load_case("inheritance").input;
  for (std::size_t i = 0; i < 3; ++i) {
    auto r = post(base + "/submissions", sheet_body(input, i), ids["agent_tokens"][input.agents[i].id]);
    CHECK(r->status == 201);
  }
  auto dup = post(base + "/submissions", sheet_body(input, 0), ids["agent_tokens"]["A"]);
  CHECK(dup->status == 409);
  CHECK(Json::parse(dup->body)["error"]["code"] == "duplicate-submission");

  auto solved = post(base + "/solve", Json::object(), mediator);
  CHECK(solved->status == 200);
  CHECK(Json::parse(solved->body)["procedure"] == "nash");

  const std::string a_token = ids["agent_tokens"]["A"];
  auto report = client.Get(base + "/report?as=" + a_token);
  CHECK(report->status == 200);
  CHECK(Json::parse(report->body)["agent"] == "A");
  CHECK(client.Get(base + "/report?as=nobody")->status == 403);
  CHECK(client.Get("/v1/sessions/unknown?as=x")->status == 404);
  CHECK(client.Get(base + "?as=" + a_token)->status == 200);

  auto cases = client.Get("/v1/cases");
  CHECK(Json::parse(cases->body).size() == 4);
  CHECK(client.Get("/v1/cases/divorce")->status == 200);

  auto adhoc = post("/v1/solve-adhoc", case_to_json(load_case("warhol").input));
  CHECK(adhoc->status == 200);
  auto malformed = client.Post("/v1/solve-adhoc", "{oops", "application/json");
  CHECK(malformed->status == 400);
  CHECK(Json::parse(malformed->body)["error"]["code"] == "malformed-json");
  CHECK(client.Get("/v2/anything")->status == 404);

  server.stop();
  loop.join();
}
