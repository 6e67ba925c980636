#pragma once

// Verification suites over a scenario and their JSON reports.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jetflow_cli/scenario.hpp"

namespace jetflow::cli {

struct CheckRecord {
  std::string name;
  std::string kind;  // tensor, law, roundtrip, ratio
  bool expect_hold = true;
  std::size_t pairs = 0;
  double max_rel_err = 0.0;
  bool pass = false;
  std::optional<Witness> witness;
  nlohmann::json extra = nlohmann::json::object();
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckRecord> checks;
  bool pass() const;
};

/// Suite names in report order.
const std::vector<std::string>& suite_names();

/// Runs one suite, or every suite for "all" (check names then carry the
/// suite as a prefix). Throws std::invalid_argument on an unknown name.
SuiteReport run_suite(const Scenario& s, std::string_view suite);

nlohmann::json report_json(const Scenario& s, const SuiteReport& r);

}  // namespace jetflow::cli
