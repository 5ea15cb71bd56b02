#include "fairdiv/case_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#ifndef FAIRDIV_DEFAULT_CASES_DIR
#define FAIRDIV_DEFAULT_CASES_DIR "cases"
#endif

namespace fairdiv {
namespace {

namespace fs = std::filesystem;

void compare_values(const std::string& field, const Json& block, const Vector& actual,
                    std::vector<Deviation>& out) {
  const Json& values = block.at("values");
  const double tol = parse_money(block.at("tolerance"));
  if (static_cast<Eigen::Index>(values.size()) != actual.size()) {
    out.push_back({field + " (length)", static_cast<double>(values.size()),
                   static_cast<double>(actual.size()), 0.0});
    return;
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double expected = parse_money(values[k]);
    const double got = actual(static_cast<Eigen::Index>(k));
    if (!(std::abs(expected - got) <= tol))
      out.push_back({field + "[" + std::to_string(k) + "]", expected, got, tol});
  }
}

void compare_matrix(const std::string& field, const Json& rows, double tol, const Matrix& actual,
                    std::vector<Deviation>& out) {
  if (static_cast<Eigen::Index>(rows.size()) != actual.rows()) {
    out.push_back({field + " (rows)", static_cast<double>(rows.size()),
                   static_cast<double>(actual.rows()), 0.0});
    return;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Vector row = actual.row(static_cast<Eigen::Index>(i)).transpose();
    compare_values(field + "[" + std::to_string(i) + "]", Json{{"values", rows[i]}, {"tolerance", tol}},
                   row, out);
  }
}

std::vector<Deviation> deviations_for(const CaseResult& r, const Json& e) {
  std::vector<Deviation> out;
  if (e.contains("allocation")) {
    const Json& a = e.at("allocation");
    compare_matrix("allocation", a.at("shares"), parse_money(a.at("tolerance")),
                   r.allocation.shares(), out);
  }
  if (e.contains("prices")) {
    const Json& p = e.at("prices");
    if (!r.prices) {
      out.push_back({"prices (missing)", 1.0, 0.0, 0.0});
    } else {
      compare_values("prices", Json{{"values", p.at("scaled")}, {"tolerance", p.at("tolerance")}},
                     r.prices->scaled_prices, out);
      if (p.contains("total")) {
        const double expected = parse_money(p.at("total"));
        const double tol = parse_money(p.at("total_tolerance"));
        const double got = r.prices->scaled_prices.sum();
        if (!(std::abs(expected - got) <= tol)) out.push_back({"prices (total)", expected, got, tol});
      }
    }
  }
  if (e.contains("utilities")) compare_values("utilities", e.at("utilities"), r.utilities.values, out);
  if (e.contains("envy_matrix")) {
    const Json& m = e.at("envy_matrix");
    compare_matrix("envy_matrix", m.at("rows"), parse_money(m.at("tolerance")),
                   r.audit.envy_matrix, out);
  }

  auto metric = [&](const char* key, auto getter) {
    if (!e.contains(key)) return;
    Vector v(static_cast<Eigen::Index>(r.metrics.size()));
    for (std::size_t i = 0; i < r.metrics.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = getter(r.metrics[i]);
    compare_values(key, e.at(key), v, out);
  };
  const double nan = std::nan("");
  metric("market_values", [](const BundleMetrics& m) { return m.market_value; });
  metric("market_value_per_weight", [](const BundleMetrics& m) { return m.market_value_per_weight; });
  metric("gains", [&](const BundleMetrics& m) { return m.gain.value_or(nan); });
  metric("central_ratings", [](const BundleMetrics& m) { return m.central_rating; });

  if (e.contains("split_count") && e.at("split_count").get<int>() != r.audit.split_count)
    out.push_back({"split_count", e.at("split_count").get<double>(),
                   static_cast<double>(r.audit.split_count), 0.0});
  if (e.contains("envy_pass") && e.at("envy_pass").get<bool>() != r.audit.envy_pass)
    out.push_back({"envy_pass", e.at("envy_pass").get<bool>() ? 1.0 : 0.0,
                   r.audit.envy_pass ? 1.0 : 0.0, 0.0});
  if (e.contains("ordering_pass") &&
      e.at("ordering_pass").get<bool>() != r.audit.ordering_pass.value_or(false))
    out.push_back({"ordering_pass", e.at("ordering_pass").get<bool>() ? 1.0 : 0.0,
                   r.audit.ordering_pass.value_or(false) ? 1.0 : 0.0, 0.0});
  return out;
}

}  // namespace

std::string default_cases_dir() {
  if (const char* env = std::getenv("FAIRDIV_CASES_DIR"); env && *env) return env;
  return FAIRDIV_DEFAULT_CASES_DIR;
}

std::vector<std::string> list_cases(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw LookupError("case directory '" + dir + "' not found");
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

CaseFixture load_case(const std::string& id, const std::string& dir) {
  const fs::path path = fs::path(dir) / (id + ".json");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw LookupError("unknown case '" + id + "'");
  const Json j = read_json_file(path.string());
  CaseFixture fixture;
  fixture.input = case_from_json(j);
  fixture.expected = j.value("expected", Json::object());
  fixture.annotations = j.value("annotations", Json::array());
  return fixture;
}

RegressionReport compare_to_expected(const std::string& id, const CaseResult& result,
                                     const Json& expected) {
  RegressionReport report;
  report.id = id;
  report.deviations = deviations_for(result, expected);
  if (report.deviations.empty()) {
    report.pass = true;
    report.matched_solution = 0;
    return report;
  }
  if (expected.contains("alternatives")) {
    int k = 0;
    for (const auto& alt : expected.at("alternatives")) {
      ++k;
      Json merged = expected;
      merged.erase("alternatives");
      for (const auto& [key, value] : alt.items()) merged[key] = value;
      if (deviations_for(result, merged).empty()) {
        report.pass = true;
        report.matched_solution = k;
        report.deviations.clear();
        return report;
      }
    }
  }
  return report;
}

RegressionReport run_regression(const std::string& id, const std::string& dir) {
  try {
    const CaseFixture fixture = load_case(id, dir);
    return compare_to_expected(id, solve_case(fixture.input), fixture.expected);
  } catch (const std::exception& e) {
    RegressionReport report;
    report.id = id;
    report.error = e.what();
    return report;
  }
}

}  // namespace fairdiv
