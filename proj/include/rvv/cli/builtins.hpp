#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rvv/cli/app.hpp"
#include "rvv/cli/scenario.hpp"

namespace rvv {

/// A canned demonstration, runnable by name. Most are a single scenario;
/// timestamp-collision runs a pair (coarse stamping, then a counter-stamped
/// control) in one report stream.
struct Builtin {
  std::string name;
  std::string summary;
  /// Prints report(s) and returns the exit code.
  std::function<int(const RunOptions&, std::ostream&)> run;
  /// Scenario used by `sweep <name>`; nullopt when sweeping makes no sense.
  std::function<std::optional<Scenario>()> sweep_scenario;
};

const std::vector<Builtin>& builtins();
const Builtin* find_builtin(const std::string& name);

}  // namespace rvv
