#include "doctest.h"

#include "fairdiv/case_corpus.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace fairdiv;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fairdiv_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("money") {
  TEST_CASE("shortest round-trip strings") {
    CHECK(format_money(630.0) == "630");
    CHECK(format_money(93.5) == "93.5");
    CHECK(format_money(0.1) == "0.1");
    const double third = 1.0 / 3.0;
    CHECK(parse_money(format_money(third)) == third);
    CHECK(format_money(-0.0) == "0");
  }

  TEST_CASE("parsing") {
    CHECK(parse_money(Json("174.5")) == 174.5);
    CHECK(parse_money(Json(12)) == 12.0);
    CHECK_THROWS_AS(parse_money(Json("12k")), FormatError);
    CHECK_THROWS_AS(parse_money(Json("")), FormatError);
    CHECK_THROWS_AS(parse_money(Json::array()), FormatError);
  }
}

TEST_SUITE("case files") {
  TEST_CASE("every corpus case round-trips") {
    for (const auto& id : list_cases()) {
      CAPTURE(id);
      const CaseFixture f = load_case(id);
      const Json once = case_to_json(f.input);
      const CaseFile back = case_from_json(once);
      CHECK(case_to_json(back).dump() == once.dump());
      CHECK(back.goods.size() == f.input.goods.size());
      for (std::size_t i = 0; i < back.agents.size(); ++i) CHECK(back.agents[i].weight == f.input.agents[i].weight);

      const fs::path dir = scratch_dir("roundtrip");
      const std::string path = (dir / (id + ".json")).string();
      write_json_file(path, once);
      CHECK(case_to_json(read_case_file(path)).dump() == once.dump());
      fs::remove_all(dir);
    }
  }

  TEST_CASE("malformed payloads") {
    Json j = case_to_json(load_case("inheritance").input);
    Json bad = j;
    bad.erase("goods");
    CHECK_THROWS_AS(case_from_json(bad), FormatError);
    bad = j;
    bad["procedure"] = "utilitarian";
    CHECK_THROWS_AS(case_from_json(bad), FormatError);
    bad = j;
    bad["bids"]["Z"] = bad["bids"]["A"];
    CHECK_THROWS_AS(case_from_json(bad), FormatError);
    bad = j;
    bad["ratings"] = Json{{"A", {3, 3, 3, 3, 3, 3}}};
    CHECK_THROWS_AS(case_from_json(bad), FormatError);
    bad = j;
    bad["bids"]["A"][0] = "abc";
    CHECK_THROWS_AS(case_from_json(bad), FormatError);
    CHECK_THROWS_AS(read_case_file("/nonexistent/case.json"), FormatError);
  }

  TEST_CASE("case validation") {
    CaseFile c = load_case("inheritance").input;
    CHECK(validate_case(c).ok());
    c.bids[0].bids[0] = 100;  // below the 144 minimum and off budget
    const auto r = validate_case(c);
    CHECK(r.has("below-range"));
    CHECK(r.has("budget-mismatch"));

    CaseFile w = load_case("warhol").input;
    CHECK(validate_case(w).ok());
    w.ratings[1].ratings[0] = 6;
    CHECK(validate_case(w).has("rating-out-of-range"));
  }

  TEST_CASE("allocations serialize with id vectors") {
    const CaseFile c = load_case("warhol").input;
    const DivisionProblem p = case_problem(c);
    Matrix z(2, 4);
    z << 1, 0.25, 0, 0,
         0, 0.75, 1, 1;
    const Json j = allocation_to_json(p, Allocation(z));
    CHECK(j.at("agents").size() == 2);
    CHECK(j.at("goods").size() == 4);
    CHECK(allocation_from_json(p, j).shares() == z);

    Json reordered = j;
    std::swap(reordered["agents"][0], reordered["agents"][1]);
    std::swap(reordered["shares"][0], reordered["shares"][1]);
    CHECK(allocation_from_json(p, reordered).shares() == z);

    Json wrong = j;
    wrong["shares"][0].erase(0);
    CHECK_THROWS(allocation_from_json(p, wrong));
  }

  TEST_CASE("rating cases recompute utilities exactly") {
    const CaseFile c = load_case("warhol").input;
    const DivisionProblem p = case_problem(c);
    CHECK(p.utilities(0, 0) == doctest::Approx(121.0).epsilon(1e-14));
    REQUIRE(case_rating_context(c).has_value());
    CHECK_FALSE(case_rating_context(load_case("inheritance").input).has_value());
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("the four cases are listed") {
    CHECK(list_cases() == std::vector<std::string>{"company-law", "divorce", "inheritance", "warhol"});
    CHECK_THROWS_AS(list_cases("/nonexistent/cases"), LookupError);
    CHECK_THROWS_AS(load_case("no-such-case"), LookupError);
  }

  TEST_CASE("fixture contents") {
    const auto inh = load_case("inheritance");
    CHECK(inh.input.agents.size() == 3);
    CHECK(inh.input.goods.size() == 6);
    CHECK(*inh.input.budget == 630.0);
    CHECK(inh.input.bids[1].bids[2] == 156.0);
    CHECK(inh.input.procedure == Procedure::Nash);

    const auto warhol = load_case("warhol");
    CHECK(warhol.input.agents.size() == 2);
    CHECK(warhol.input.goods.size() == 4);
    for (const auto& g : warhol.input.goods) CHECK(*g.market_value == 100.0);
    CHECK(*warhol.input.k == 1.1);

    const auto company = load_case("company-law");
    CHECK(company.input.agents[0].weight == doctest::Approx(3.0 / 9.0));
    CHECK(company.input.agents[1].weight == doctest::Approx(5.0 / 9.0));
    CHECK(company.input.agents[2].weight == doctest::Approx(1.0 / 9.0));
    CHECK(company.input.procedure == Procedure::Egalitarian);

    // Money is a disputed item in the company-law case only.
    CHECK(company.input.goods.back().id == "money");
    CHECK(load_case("divorce").input.goods.size() == 7);
  }

  TEST_CASE("every expectation carries provenance") {
    for (const auto& id : list_cases()) {
      CAPTURE(id);
      const auto f = load_case(id);
      for (const auto& [key, value] : f.expected.items()) {
        if (!value.is_object() || key == "alternatives") continue;
        CHECK_MESSAGE(value.contains("source"), key);
        CHECK_MESSAGE(value.contains("tolerance"), key);
      }
    }
  }

  TEST_CASE("regressions") {
    for (const char* id : {"inheritance", "warhol", "divorce"}) {
      const auto r = run_regression(id);
      CAPTURE(id);
      CHECK(r.pass);
      CHECK(r.error.empty());
    }
    // The published company-law matrix is a different vertex of the same
    // optimal face; the solver's vertex has equal utilities.
    const auto company = run_regression("company-law");
    CHECK_FALSE(company.pass);
    for (const auto& d : company.deviations)
      CHECK(d.field.rfind("central_ratings", 0) != 0);
  }

  TEST_CASE("corrupted fixture is named") {
    const fs::path dir = scratch_dir("corrupt");
    Json j = read_json_file(default_cases_dir() + "/inheritance.json");
    j["expected"]["prices"]["scaled"][0] = "150";
    write_json_file((dir / "inheritance.json").string(), j);
    const auto r = run_regression("inheritance", dir.string());
    CHECK_FALSE(r.pass);
    REQUIRE_FALSE(r.deviations.empty());
    CHECK(r.deviations[0].field == "prices[0]");
    CHECK(r.deviations[0].expected == 150.0);

    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_FALSE(run_regression("broken", dir.string()).error.empty());
    fs::remove_all(dir);
  }

  TEST_CASE("warhol twin matches an alternative") {
    const auto f = load_case("warhol");
    const CaseResult r = solve_case(f.input);
    const auto report = compare_to_expected("warhol", r, f.expected);
    CHECK(report.pass);
    CHECK(report.matched_solution >= 0);
  }
}
