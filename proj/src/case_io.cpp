#include "fairdiv/case_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fairdiv {
namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string get_string(const Json& j, const char* key, const std::string& fallback = "") {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

double get_number(const Json& j) {
  if (!j.is_number()) throw FormatError("expected a number, got " + j.dump());
  return j.get<double>();
}

}  // namespace

std::string to_string(Procedure p) { return p == Procedure::Nash ? "nash" : "egalitarian"; }

Procedure procedure_from_string(const std::string& s) {
  if (s == "nash") return Procedure::Nash;
  if (s == "egalitarian") return Procedure::Egalitarian;
  throw FormatError("unknown procedure '" + s + "'");
}

AppreciationFactor CaseFile::appreciation() const {
  return k ? AppreciationFactor(*k) : AppreciationFactor();
}

std::string format_money(double value) {
  if (!std::isfinite(value)) throw FormatError("money value is not finite");
  if (value == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_money(const Json& value) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw FormatError("money must be a decimal string, got " + value.dump());
  const auto& s = value.get_ref<const std::string&>();
  double out = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("malformed decimal '" + s + "'");
  return out;
}

Json case_to_json(const CaseFile& c) {
  Json j;
  if (!c.id.empty()) j["id"] = c.id;
  j["procedure"] = to_string(c.procedure);
  j["goods"] = Json::array();
  for (const auto& g : c.goods) {
    Json good{{"id", g.id}, {"label", g.label}};
    if (g.market_value) good["market_value"] = format_money(*g.market_value);
    j["goods"].push_back(good);
  }
  j["agents"] = Json::array();
  for (const auto& a : c.agents) j["agents"].push_back({{"id", a.id}, {"label", a.label}, {"weight", a.weight}});
  if (c.budget) j["budget"] = format_money(*c.budget);
  if (c.k) j["K"] = *c.k;
  if (!c.ranges.empty()) {
    j["ranges"] = Json::array();
    for (const auto& r : c.ranges) {
      Json range{{"lower", format_money(r.lower)}};
      if (r.upper) range["upper"] = format_money(*r.upper);
      j["ranges"].push_back(range);
    }
  }
  if (c.has_bids()) {
    j["bids"] = Json::object();
    for (const auto& s : c.bids) {
      Json row = Json::array();
      for (double b : s.bids) row.push_back(format_money(b));
      j["bids"][s.agent_id] = row;
    }
  }
  if (c.has_ratings()) {
    j["ratings"] = Json::object();
    for (const auto& s : c.ratings) j["ratings"][s.agent_id] = s.ratings;
  }
  if (c.fractional_ratings) j["fractional_ratings"] = true;
  return j;
}

CaseFile case_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("case must be a JSON object");
  CaseFile c;
  c.id = get_string(j, "id");
  c.procedure = procedure_from_string(get_string(j, "procedure", "nash"));

  for (const auto& g : require(j, "goods")) {
    Good good;
    good.id = get_string(g, "id");
    if (good.id.empty()) throw FormatError("every good needs an id");
    good.label = get_string(g, "label", good.id);
    if (g.contains("market_value") && !g.at("market_value").is_null())
      good.market_value = parse_money(g.at("market_value"));
    c.goods.push_back(good);
  }
  for (const auto& a : require(j, "agents")) {
    Agent agent;
    agent.id = get_string(a, "id");
    if (agent.id.empty()) throw FormatError("every agent needs an id");
    agent.label = get_string(a, "label", agent.id);
    if (a.contains("weight")) agent.weight = get_number(a.at("weight"));
    c.agents.push_back(agent);
  }
  if (j.contains("budget") && !j.at("budget").is_null()) c.budget = parse_money(j.at("budget"));
  if (j.contains("K") && !j.at("K").is_null()) c.k = get_number(j.at("K"));
  if (j.contains("ranges") && !j.at("ranges").is_null()) {
    for (const auto& r : j.at("ranges")) {
      BidRange range;
      range.lower = parse_money(require(r, "lower"));
      if (r.contains("upper") && !r.at("upper").is_null()) range.upper = parse_money(r.at("upper"));
      c.ranges.push_back(range);
    }
  }
  c.fractional_ratings = j.value("fractional_ratings", false);

  // Agent-keyed maps; sheets are stored in roster order.
  auto keyed = [&](const char* key) {
    std::map<std::string, Json> out;
    if (!j.contains(key) || j.at(key).is_null()) return out;
    if (!j.at(key).is_object()) throw FormatError(std::string("'") + key + "' must map agent ids");
    for (const auto& [id, row] : j.at(key).items()) {
      const bool known = std::any_of(c.agents.begin(), c.agents.end(),
                                     [&](const Agent& a) { return a.id == id; });
      if (!known) throw FormatError(std::string("'") + key + "' names unknown agent '" + id + "'");
      out[id] = row;
    }
    return out;
  };
  const auto bids = keyed("bids");
  const auto ratings = keyed("ratings");
  if (!bids.empty() && !ratings.empty())
    throw FormatError("a case carries either bids or ratings, not both");
  for (const auto& a : c.agents) {
    if (auto it = bids.find(a.id); it != bids.end()) {
      BidSheet sheet;
      sheet.agent_id = a.id;
      for (const auto& b : it->second) sheet.bids.push_back(parse_money(b));
      sheet.budget = c.budget.value_or(sheet.total());
      c.bids.push_back(sheet);
    } else if (!bids.empty()) {
      throw FormatError("agent '" + a.id + "' has no bids");
    }
    if (auto it = ratings.find(a.id); it != ratings.end()) {
      RatingSheet sheet;
      sheet.agent_id = a.id;
      for (const auto& r : it->second) sheet.ratings.push_back(get_number(r));
      c.ratings.push_back(sheet);
    } else if (!ratings.empty()) {
      throw FormatError("agent '" + a.id + "' has no ratings");
    }
  }
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

CaseFile read_case_file(const std::string& path) { return case_from_json(read_json_file(path)); }

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

DivisionProblem case_problem(const CaseFile& c) {
  if (c.has_bids()) {
    DivisionProblem p;
    p.agents = c.agents;
    p.goods = c.goods;
    p.utilities.resize(static_cast<Eigen::Index>(c.agents.size()),
                       static_cast<Eigen::Index>(c.goods.size()));
    for (std::size_t i = 0; i < c.bids.size(); ++i) {
      if (c.bids[i].bids.size() != c.goods.size())
        throw StructuralError("bid sheet of agent '" + c.bids[i].agent_id + "' has the wrong length");
      for (std::size_t a = 0; a < c.goods.size(); ++a)
        p.utilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = c.bids[i].bids[a];
    }
    return p;
  }
  if (c.has_ratings()) return ratings_to_utilities(c.ratings, c.agents, c.goods, c.appreciation());
  throw StructuralError("case has neither bids nor ratings");
}

std::optional<RatingContext> case_rating_context(const CaseFile& c) {
  if (!c.has_ratings()) return std::nullopt;
  DivisionProblem p;
  p.goods = c.goods;
  return RatingContext{c.ratings, p.market_values(), c.appreciation()};
}

ValidationReport validate_case(const CaseFile& c) {
  ValidationReport report;
  auto merge = [&](const ValidationReport& r, const std::string& prefix) {
    for (auto v : r.violations) {
      v.message = prefix + v.message;
      report.violations.push_back(v);
    }
    for (auto v : r.warnings) {
      v.message = prefix + v.message;
      report.warnings.push_back(v);
    }
  };
  if (c.k) {
    try {
      AppreciationFactor check(*c.k);
    } catch (const RatingError& e) {
      report.violations.push_back({"bad-appreciation-factor", e.what()});
    }
  }
  if (c.has_bids()) {
    if (c.budget && !(*c.budget > 0.0))
      report.violations.push_back({"non-positive-budget", "budget must be positive"});
    for (const auto& s : c.bids) {
      if (c.budget)
        merge(validate_bids(s, c.ranges, *c.budget), s.agent_id + ": ");
      else if (s.bids.size() != c.goods.size())
        report.violations.push_back({"dimension-mismatch", s.agent_id + ": wrong number of bids"});
    }
  } else if (c.has_ratings()) {
    for (const auto& g : c.goods)
      if (!g.market_value)
        report.violations.push_back({"missing-market-value", "good '" + g.id + "' has no market value"});
    for (const auto& s : c.ratings)
      merge(validate_ratings(s, c.goods.size(), c.fractional_ratings), s.agent_id + ": ");
  } else {
    report.violations.push_back({"no-inputs", "case has neither bids nor ratings"});
  }
  if (report.ok()) merge(validate_problem(case_problem(c)), "");
  return report;
}

Json allocation_to_json(const DivisionProblem& problem, const Allocation& alloc) {
  Json j;
  j["agents"] = Json::array();
  for (const auto& a : problem.agents) j["agents"].push_back(a.id);
  j["goods"] = Json::array();
  for (const auto& g : problem.goods) j["goods"].push_back(g.id);
  j["shares"] = Json::array();
  for (Eigen::Index i = 0; i < alloc.num_agents(); ++i) {
    Json row = Json::array();
    for (Eigen::Index a = 0; a < alloc.num_goods(); ++a) row.push_back(alloc(i, a));
    j["shares"].push_back(row);
  }
  return j;
}

Allocation allocation_from_json(const DivisionProblem& problem, const Json& j) {
  const Json& agents = require(j, "agents");
  const Json& goods = require(j, "goods");
  const Json& shares = require(j, "shares");
  if (agents.size() != problem.agents.size() || goods.size() != problem.goods.size() ||
      shares.size() != agents.size())
    throw StructuralError("allocation dimensions do not match the case");
  Allocation alloc = Allocation::zeros(problem.num_agents(), problem.num_goods());
  for (std::size_t r = 0; r < agents.size(); ++r) {
    const Eigen::Index i = problem.agent_index(agents[r].get<std::string>());
    if (shares[r].size() != goods.size()) throw StructuralError("allocation row has the wrong length");
    for (std::size_t col = 0; col < goods.size(); ++col)
      alloc(i, problem.good_index(goods[col].get<std::string>())) = get_number(shares[r][col]);
  }
  return alloc;
}

}  // namespace fairdiv
