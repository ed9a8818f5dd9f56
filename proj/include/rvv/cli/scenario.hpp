#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rvv/engine/engine.hpp"
#include "rvv/engine/store.hpp"
#include "rvv/schedule/executor.hpp"
#include "rvv/schedule/history.hpp"
#include "rvv/schedule/program.hpp"

namespace rvv {

/// One client flow to instantiate. `pattern` is one of: blind, sensitive,
/// conditional, reselect, occ.
struct ProgramSpec {
  std::string pattern;
  std::string name;
  std::string item;
  std::int64_t delta = 0;
  std::optional<Isolation> iso;  // reselect: isolation of the re-read
  std::size_t retries = 3;
};

/// Row contents independent of stamp kind; stamps are applied when the
/// store is materialized, so a --stamp override restamps cleanly.
struct RowSpec {
  std::string table;
  std::string id;
  std::map<std::string, std::int64_t> columns;
};

/// A runnable setup: engine configuration, initial rows, and either a
/// history or a composition of pattern programs.
struct Scenario {
  std::string name;
  EngineConfig config;
  Isolation default_iso = Isolation::ReadCommitted;
  std::vector<RowSpec> row_specs;
  Store initial;
  ItemBindings items;
  std::optional<History> history;
  std::vector<ProgramSpec> programs;
  /// Fixed schedule by program name; empty means priority order.
  std::vector<std::string> schedule;
  /// Expected facts, checked after the run (key, value); order preserved.
  std::vector<std::pair<std::string, std::string>> expects;
  bool check_invariants = false;
};

struct ScenarioError {
  std::size_t line = 0;
  std::size_t column = 0;
  std::string message;
};

/// Parses the scenario file format (documented in README.md): one `key
/// value...` directive per line, `#` comments, history given either inline
/// after `history` or between `begin-history`/`end-history`.
std::variant<Scenario, ScenarioError> parse_scenario_text(const std::string& text);

/// A file whose first significant line starts with `name ` is a scenario;
/// anything else runs as a bare history.
bool looks_like_scenario(const std::string& text);

/// Wraps a plain history in a runnable scenario: default bindings, one row
/// per item (items/<item> val=1000, stamp 0), LSCC, READ_COMMITTED,
/// counter stamps.
std::variant<Scenario, ScenarioError> scenario_from_history_text(const std::string& text,
                                                                 std::string name);

/// Rebuilds sc.initial from row_specs, stamping with the current
/// config.stamp (value 0). Call after any config override.
void materialize_rows(Scenario& sc);

/// Bindings for unbound referenced items, plus a row (val=1000, stamp 0)
/// for every binding whose key is missing from the store.
void seed_default_rows(Scenario& sc);

/// Instantiates the scenario's pattern programs (empty when it carries a
/// history instead). Priorities follow declaration order.
std::vector<std::unique_ptr<Program>> make_pattern_programs(const Scenario& sc);

/// Empty string when the scenario is internally consistent and can run.
std::string validate_scenario(const Scenario& sc);

}  // namespace rvv
