#pragma once

#include "fairdiv/pipeline.hpp"

#include <string>
#include <vector>

namespace fairdiv {

struct LookupError : Error {
  using Error::Error;
};

/// A case file plus its expected outputs, tolerances and typo annotations.
struct CaseFixture {
  CaseFile input;
  Json expected;
  Json annotations;
};

/// Directory holding the bundled case files, overridable via FAIRDIV_CASES_DIR.
std::string default_cases_dir();

std::vector<std::string> list_cases(const std::string& dir = default_cases_dir());
CaseFixture load_case(const std::string& id, const std::string& dir = default_cases_dir());

struct Deviation {
  std::string field;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 0.0;
};

struct RegressionReport {
  std::string id;
  bool pass = false;
  /// Which expected solution matched: 0 for the primary one, k for alternative k.
  int matched_solution = -1;
  std::vector<Deviation> deviations;  // against the primary solution when nothing matched
  std::string error;                  // solver or format failure, if any
};

/// Compare a solved case against a fixture's expectations.
RegressionReport compare_to_expected(const std::string& id, const CaseResult& result,
                                     const Json& expected);

RegressionReport run_regression(const std::string& id, const std::string& dir = default_cases_dir());

}  // namespace fairdiv
