#pragma once

// Scenario files: geometry, chart changes, sampling and suite sizes for the
// command-line tool.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "jetflow/dtensor.hpp"
#include "jetflow/geometry.hpp"
#include "jetflow/maps.hpp"
#include "jetflow/numdiff.hpp"
#include "jetflow/prolong.hpp"

namespace jetflow::cli {

/// Schema or catalog error located by a JSON pointer into the scenario.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string pointer, const std::string& what)
      : std::runtime_error(pointer.empty() ? what : pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct Candidate {
  std::string name;
  IndexSignature signature;
  std::vector<Expr> components;
  bool expect_hold = true;  // "expect": "break" marks a negative control
};

struct NamedField {
  std::string name;
  BaseVectorField field;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  int p = 0;
  int n = 0;
  std::optional<Metric> temporal;
  std::optional<Metric> spatial;
  Box t_box;
  Box x_box;
  double v_scale = 1.0;
  std::vector<ChangeMap> changes;
  double tol_symbolic = 1e-8;
  double tol_fd = 1e-6;
  int jets = 10;
  std::vector<Candidate> candidates;
  std::vector<NamedField> fields;
  GridOptions grid;

  const Metric& h() const { return *temporal; }
  const Metric& phi() const { return *spatial; }
};

/// Builds a scenario. `seed_override` replaces the file's seed before any
/// random change is drawn.
Scenario load_scenario(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = {});
Scenario load_scenario_file(const std::string& path, std::optional<std::uint64_t> seed_override = {});

/// JETFLOW_SEED as an integer, if set. Throws ScenarioError on junk.
std::optional<std::uint64_t> seed_from_environment();

/// JetPoint from {"t": [...], "x": [...], "v": [[...]]}.
JetPoint parse_jet(const nlohmann::json& j, int p, int n, const std::string& pointer);
nlohmann::json jet_to_json(const JetPoint& u);

}  // namespace jetflow::cli
