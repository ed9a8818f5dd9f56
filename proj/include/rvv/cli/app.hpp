#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rvv/cli/report.hpp"
#include "rvv/cli/scenario.hpp"

namespace rvv {

/// Command-line knobs that reach scenario execution.
struct RunOptions {
  ReportKind report = ReportKind::Text;
  bool color = false;
  std::uint64_t seed = 0;
  /// 0: exhaustive sweep. N: sample exactly N seeded random schedules.
  std::uint64_t limit = 0;
};

/// Runs the scenario once (scripted schedule when it has one, priority
/// order otherwise) and collects trace, anomalies, outcomes and expect
/// results. Setup problems come back in trace.error.
RunReport execute_scenario(const Scenario& sc, const RunOptions& opt);

/// Explores schedules of the scenario; exhaustive by default, sampled when
/// opt.limit > 0. On setup or bound problems fills `error`.
SweepReport execute_sweep(const Scenario& sc, const RunOptions& opt, std::string& error);

/// Entry point behind main(): parses arguments, dispatches run/sweep,
/// writes reports to `out` and problems to `err`. Returns the process exit
/// code: 0 all expectations met, 1 some expectation failed, 2 usage or
/// input error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rvv
