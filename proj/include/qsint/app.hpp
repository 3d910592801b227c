#pragma once

// Command layer behind the C API: configuration, the six commands and their
// reports.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsint/solver.hpp"

namespace qsint {

inline constexpr const char* kSchemaVersion = "1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generating functions for `class: general`, each "poly:c0,c1,..." or a
/// plain number. Liouville fields are polynomials in u (or v), Lie fields in eta.
struct GeneralInputs {
  std::string kind = "liouville";  // liouville | lie
  std::string F = "poly:1", G = "poly:1", f = "poly:0", g = "poly:0";
};

struct RunConfig {
  std::string cls = "I1";  // I1..II3 or general
  std::map<std::string, Real> params;
  std::vector<Real> hbar{1.0};
  std::uint64_t seed = 1;
  int samples = 25;
  int draws = 1;
  int jet_order = 8;
  std::optional<Real> tol;  // overrides every per-check tolerance
  std::string output = "json";
  // spectrum
  int grid_n = 2000;
  Interval e_range{0, 10};
  std::vector<std::pair<int, int>> branches{{0, 0}, {0, 1}, {1, 0}};
  Interval u_box{-6, 6};
  Interval v_box{-6, 6};
  bool oracle = false;
  // wkb
  Interval interval{1, 2};
  std::pair<Real, Real> weights{1, 0};
  Real energy = 1;
  std::optional<Real> separation;
  GeneralInputs general;
};

/// Reads a JSON config; unknown keys and bad values raise ConfigError.
RunConfig parse_config(std::string_view json_text);
/// Canonical JSON echo of a config.
std::string config_to_json(const RunConfig& cfg);

struct Report {
  std::string json;  // deterministic, numbers at 17 significant digits
  std::string text;
  int exit_code = 0;  // 0 pass, 1 check failed, 2 config error, 3 runtime/domain error
  std::string error;  // message for exit codes 2 and 3

  const std::string& rendered(const RunConfig& cfg) const {
    return cfg.output == "text" ? text : json;
  }
};

/// verify | fit | casimir | spectrum | wkb | catalog. Never throws; failures
/// are reported in-band.
Report run_command(std::string_view command, const RunConfig& cfg);
/// Parses the config first; a parse failure gives an exit-2 report.
Report run_command_json(std::string_view command, std::string_view config_json);

/// "poly:c0,c1,..." or a number, as a polynomial in `var`.
ScalarField parse_field_spec(std::string_view spec, const ScalarField& var);

/// The system described by a config (catalog class or general inputs) at
/// the first draw and first hbar.
struct ResolvedSystem {
  std::optional<ClassTag> tag;
  ParamEnv env;
  IntegrableSystem base;
  std::optional<DiffOp> B;
  SafeDomain domain;
};
ResolvedSystem resolve_system(const RunConfig& cfg, int draw, Real hbar);

}  // namespace qsint
