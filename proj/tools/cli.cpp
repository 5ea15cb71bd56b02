#include "cli.hpp"

#include "fairdiv/case_corpus.hpp"
#include "fairdiv/http_server.hpp"
#include "fairdiv/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>

namespace fairdiv::cli {
namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// Rows labelled by agent, columns by good.
void print_matrix(std::ostream& out, const DivisionProblem& p, const Matrix& m, int precision) {
  std::size_t width = 10;
  for (const auto& g : p.goods) width = std::max(width, g.id.size() + 2);
  out << pad_right("", 8);
  for (const auto& g : p.goods) out << pad(g.id, width);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << pad_right(p.agents[static_cast<std::size_t>(i)].id, 8);
    for (Eigen::Index a = 0; a < m.cols(); ++a) out << pad(fixed(m(i, a), precision), width);
    out << '\n';
  }
}

void print_result(std::ostream& out, const CaseResult& r) {
  const auto& p = r.problem;
  out << "procedure: " << to_string(r.procedure)
      << (r.non_default_pairing ? " (non-default pairing for these inputs)" : "") << "\n\n";
  out << "allocation\n";
  print_matrix(out, p, r.allocation.shares(), 4);
  out << "\nagent      utility   normalized\n";
  for (Eigen::Index i = 0; i < p.num_agents(); ++i)
    out << pad_right(p.agents[static_cast<std::size_t>(i)].id, 8) << pad(fixed(r.utilities.values(i), 3), 11)
        << pad(fixed(r.utilities.normalized(i), 6), 13) << '\n';
  if (r.prices) {
    out << "\nequilibrium prices (budget " << fixed(r.prices->budget, 3) << ")\n";
    for (Eigen::Index a = 0; a < p.num_goods(); ++a)
      out << pad_right(p.goods[static_cast<std::size_t>(a)].id, 16)
          << pad(fixed(r.prices->scaled_prices(a), 3), 12) << '\n';
    out << pad_right("total", 16) << pad(fixed(r.prices->scaled_prices.sum(), 3), 12) << '\n';
  }
  if (!r.metrics.empty()) {
    out << "\nagent     weight  market value     MV/W       gain   central rating\n";
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
      const auto& m = r.metrics[i];
      out << pad_right(p.agents[i].id, 8) << pad(fixed(p.agents[i].weight, 4), 8)
          << pad(fixed(m.market_value, 3), 14) << pad(fixed(m.market_value_per_weight, 3), 10)
          << pad(m.gain ? fixed(*m.gain, 5) : "-", 11) << pad(fixed(m.central_rating, 4), 17) << '\n';
    }
  }
  out << "\nsplit goods: " << r.audit.split_count << '\n';
}

void print_audit(std::ostream& out, const DivisionProblem& p, const AuditReport& a) {
  out << "envy matrix (row: valuer, column: bundle)\n";
  Matrix envy = a.envy_matrix;
  out << pad_right("", 8);
  for (const auto& ag : p.agents) out << pad(ag.id, 12);
  out << '\n';
  for (Eigen::Index i = 0; i < envy.rows(); ++i) {
    out << pad_right(p.agents[static_cast<std::size_t>(i)].id, 8);
    for (Eigen::Index j = 0; j < envy.cols(); ++j) out << pad(fixed(envy(i, j), 3), 12);
    out << '\n';
  }
  out << "no envy: " << (a.envy_pass ? "pass" : "FAIL") << '\n';
  for (const auto& [i, j] : a.envious_pairs)
    out << "  " << p.agents[static_cast<std::size_t>(i)].id << " envies "
        << p.agents[static_cast<std::size_t>(j)].id << '\n';
  out << "fair share: " << (a.fair_share_pass ? "pass" : "FAIL") << '\n';
  for (std::size_t i = 0; i < a.fair_share.size(); ++i)
    out << "  " << pad_right(p.agents[i].id, 6) << fixed(a.fair_share[i].utility, 3)
        << " >= " << fixed(a.fair_share[i].threshold, 3) << (a.fair_share[i].pass ? "" : "  FAIL") << '\n';
  out << "efficiency: " << (a.efficiency.pass ? "pass" : "FAIL (dominated)") << '\n';
  if (a.ordering_pass)
    out << "market value / gain ordering: " << (*a.ordering_pass ? "pass" : "FAIL") << '\n';
  out << "split goods: " << a.split_count << '\n';
}

void print_explanation(std::ostream& out, const DivisionProblem& p, const AgentPurchase& a) {
  out << "agent " << p.agents[static_cast<std::size_t>(a.agent)].id << ", budget "
      << fixed(a.budget, 3) << '\n';
  out << pad_right("good", 16) << pad("price", 12) << pad("bid", 12) << pad("discount", 12) << '\n';
  for (const auto& row : a.table)
    out << pad_right(p.goods[static_cast<std::size_t>(row.good)].id, 16) << pad(fixed(row.price, 3), 12)
        << pad(fixed(row.bid, 3), 12)
        << pad(row.ruled_out() ? "ruled out" : "-" + fixed(*row.discount * 100.0, 2) + "%", 12) << '\n';
  out << "purchases\n";
  for (const auto& s : a.purchases)
    out << "  " << pad_right(p.goods[static_cast<std::size_t>(s.good)].id, 16) << " share "
        << fixed(s.share, 4) << "  pays " << fixed(s.cost, 3) << "  left " << fixed(s.remaining, 3)
        << '\n';
  out << "remaining budget: " << fixed(a.remaining, 3) << '\n';
}

std::string default_output(const std::string& input, const std::string& suffix) {
  return fs::path(input).stem().string() + suffix;
}

Allocation read_allocation(const DivisionProblem& p, const std::string& path) {
  const Json j = read_json_file(path);
  return allocation_from_json(p, j.contains("allocation") ? j.at("allocation") : j);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fair division of goods: solve, audit and explain cases"};
  app.require_subcommand(1);

  std::string case_path, second_path, output, format = "table", procedure, agent;
  std::string cases_dir = default_cases_dir();
  double tol = 1e-9;
  int max_iter = kDefaultMaxIterations;
  ServerConfig server;

  auto* solve = app.add_subcommand("solve", "solve a case file and write a result file");
  solve->add_option("case", case_path, "case file")->required();
  solve->add_option("--procedure", procedure, "override: nash or egalitarian")
      ->check(CLI::IsMember({"nash", "egalitarian"}));
  solve->add_option("--tol", tol, "solver tolerance")->capture_default_str();
  solve->add_option("--max-iter", max_iter, "iteration cap for the Nash solver")->capture_default_str();
  solve->add_option("-o,--output", output, "result file (default: <case>.result.json)");

  auto* audit_cmd = app.add_subcommand("audit", "audit an allocation against a case");
  audit_cmd->add_option("case", case_path, "case file")->required();
  audit_cmd->add_option("allocation", second_path, "allocation or result file")->required();
  audit_cmd->add_option("--tol", tol, "audit tolerance")->capture_default_str();
  audit_cmd->add_option("-o,--output", output, "audit report file (default: <allocation>.audit.json)");

  auto* explain = app.add_subcommand("explain", "posted-price purchase tables of a Nash result");
  explain->add_option("case", case_path, "case file")->required();
  explain->add_option("result", second_path, "result file")->required();
  explain->add_option("--agent", agent, "only this agent");

  auto* frontier = app.add_subcommand("frontier", "Pareto frontier vertices of a two-agent case");
  frontier->add_option("case", case_path, "case file")->required();
  frontier->add_option("-o,--output", output, "vertex file (default: <case>.frontier.json)");

  auto* regress = app.add_subcommand("regress", "run the case corpus regression");
  regress->add_option("--cases-dir", cases_dir, "corpus directory")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "run the HTTP mediation service");
  serve->add_option("--data-dir", server.data_dir, "session storage directory")->capture_default_str();
  serve->add_option("--host", server.host, "listen address")->capture_default_str();
  serve->add_option("--port", server.port, "listen port")->capture_default_str();
  serve->add_option("--cases-dir", server.cases_dir, "corpus directory");
  serve->add_option("--K", server.default_k, "default appreciation factor")->capture_default_str();
  serve->add_option("--tol", server.tol, "solver tolerance")->capture_default_str();

  for (auto* cmd : {solve, audit_cmd, explain, frontier, regress})
    cmd->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}))
        ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (*solve) {
      const CaseFile c = read_case_file(case_path);
      SolveOptions options;
      options.tol = tol;
      options.max_iter = max_iter;
      if (!procedure.empty()) options.procedure = procedure_from_string(procedure);
      const CaseResult r = solve_case(c, options);
      const Json j = result_to_json(r);
      write_json_file(output.empty() ? default_output(case_path, ".result.json") : output, j);
      if (format == "json")
        out << j.dump(2) << '\n';
      else
        print_result(out, r);
      return kExitOk;
    }

    if (*audit_cmd) {
      const CaseFile c = read_case_file(case_path);
      const DivisionProblem p = case_problem(c);
      const Allocation alloc = read_allocation(p, second_path);
      const AuditReport a = audit(p, alloc, case_rating_context(c), tol);
      const Json j = audit_to_json(p, a);
      write_json_file(output.empty() ? default_output(second_path, ".audit.json") : output, j);
      if (format == "json")
        out << j.dump(2) << '\n';
      else
        print_audit(out, p, a);
      return kExitOk;
    }

    if (*explain) {
      const CaseFile c = read_case_file(case_path);
      const DivisionProblem p = case_problem(c);
      const auto prices = prices_from_json(p, read_json_file(second_path));
      if (!prices) {
        err << "explain needs a Nash result with prices\n";
        return kExitInvalid;
      }
      const PurchaseExplanation e = purchase_explanation(p, *prices);
      Json j = Json::array();
      for (const auto& a : e.agents) {
        if (!agent.empty() && p.agents[static_cast<std::size_t>(a.agent)].id != agent) continue;
        j.push_back(explanation_to_json(p, a));
        if (format == "table") {
          print_explanation(out, p, a);
          out << '\n';
        }
      }
      if (j.empty()) {
        err << "unknown agent '" << agent << "'\n";
        return kExitInvalid;
      }
      if (format == "json") out << j.dump(2) << '\n';
      return kExitOk;
    }

    if (*frontier) {
      const CaseFile c = read_case_file(case_path);
      const DivisionProblem p = case_problem(c);
      const auto vertices = frontier_2agent(p);
      Json j;
      j["agents"] = {p.agents[0].id, p.agents[1].id};
      j["vertices"] = Json::array();
      for (const auto& [u1, u2] : vertices) j["vertices"].push_back({u1, u2});
      const auto [e1, e2] = equal_utility_point(vertices);
      j["equal_utility_point"] = {e1, e2};
      write_json_file(output.empty() ? default_output(case_path, ".frontier.json") : output, j);
      if (format == "json") {
        out << j.dump(2) << '\n';
      } else {
        out << pad(p.agents[0].id, 12) << pad(p.agents[1].id, 12) << '\n';
        for (const auto& [u1, u2] : vertices) out << pad(fixed(u1, 3), 12) << pad(fixed(u2, 3), 12) << '\n';
        out << "equal utility point: (" << fixed(e1, 3) << ", " << fixed(e2, 3) << ")\n";
      }
      return kExitOk;
    }

    if (*regress) {
      const auto ids = list_cases(cases_dir);
      int passed = 0;
      Json j = Json::array();
      for (const auto& id : ids) {
        const RegressionReport r = run_regression(id, cases_dir);
        passed += r.pass ? 1 : 0;
        Json entry{{"id", id}, {"pass", r.pass}};
        if (!r.error.empty()) entry["error"] = r.error;
        entry["deviations"] = Json::array();
        for (const auto& d : r.deviations)
          entry["deviations"].push_back(
              {{"field", d.field}, {"expected", d.expected}, {"actual", d.actual}, {"tolerance", d.tolerance}});
        j.push_back(entry);
        if (format == "table") {
          out << (r.pass ? "PASS " : "FAIL ") << id << '\n';
          if (!r.error.empty()) out << "  error: " << r.error << '\n';
          for (const auto& d : r.deviations)
            out << "  " << d.field << ": expected " << d.expected << ", got " << d.actual
                << " (tolerance " << d.tolerance << ")\n";
        }
      }
      if (format == "json")
        out << j.dump(2) << '\n';
      else
        out << passed << "/" << ids.size() << " cases pass\n";
      return passed == static_cast<int>(ids.size()) && !ids.empty() ? kExitOk : kExitFailure;
    }

    if (*serve) return run_server(server, out);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const ValidationFailed& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace fairdiv::cli
