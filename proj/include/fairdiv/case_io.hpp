#pragma once

#include "fairdiv/bid_intake.hpp"
#include "fairdiv/core_model.hpp"
#include "fairdiv/rating_model.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fairdiv {

using Json = nlohmann::ordered_json;

enum class Procedure { Nash, Egalitarian };

std::string to_string(Procedure p);
Procedure procedure_from_string(const std::string& s);

/// Raised for malformed case, result or session payloads.
struct FormatError : Error {
  using Error::Error;
};

/// Inputs of one division case, as stored in case files.
struct CaseFile {
  std::string id;
  Procedure procedure = Procedure::Nash;
  std::vector<Good> goods;
  std::vector<Agent> agents;
  std::optional<double> budget;
  std::optional<double> k;
  std::vector<BidRange> ranges;     // empty: no ranges
  std::vector<BidSheet> bids;       // in agent order, empty for rating cases
  std::vector<RatingSheet> ratings;  // in agent order, empty for bid cases
  bool fractional_ratings = false;

  bool has_bids() const { return !bids.empty(); }
  bool has_ratings() const { return !ratings.empty(); }
  AppreciationFactor appreciation() const;
};

/// Shortest decimal string that parses back to the same double.
std::string format_money(double value);
/// Accepts a decimal string or, leniently, a JSON number.
double parse_money(const Json& value);

Json case_to_json(const CaseFile& c);
CaseFile case_from_json(const Json& j);
CaseFile read_case_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

/// Utilities of the case: bids verbatim, or K^(r - 3) m for ratings.
DivisionProblem case_problem(const CaseFile& c);
std::optional<RatingContext> case_rating_context(const CaseFile& c);

/// Field-level validation of inputs (bids against ranges and budget, ratings
/// against the star scale) plus the problem-level checks.
ValidationReport validate_case(const CaseFile& c);

Json allocation_to_json(const DivisionProblem& problem, const Allocation& alloc);
/// Reads a row-major allocation, matching agent and good ids against the problem.
Allocation allocation_from_json(const DivisionProblem& problem, const Json& j);

}  // namespace fairdiv
