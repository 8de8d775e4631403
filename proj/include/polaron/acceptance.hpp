#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polaron/io.hpp"

namespace polaron {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  Json tolerances = Json::object();
  Json measured = Json::object();
  std::string detail;
};

struct AcceptanceOptions {
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool mutation_check = true;
  unsigned threads = 1;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  /// Passes when the sign-flipped coupling makes the identity check fail.
  std::optional<CriterionResult> mutation;
  bool passed() const;
};

/// Runs the pinned fixtures. `progress` sees each result as soon as it is known.
AcceptanceReport run_acceptance(const AcceptanceOptions& options,
                                const std::function<void(const CriterionResult&)>& progress = {});

CriterionResult run_criterion(int id, unsigned threads);
/// Cross-route identity check with the MC coupling sign flipped.
CriterionResult run_mutation_check(unsigned threads);

/// "[PASS] 3 name: detail".
std::string summary_line(const CriterionResult& r);
Json to_json(const CriterionResult& r);
Json to_json(const AcceptanceReport& r);

}  // namespace polaron
