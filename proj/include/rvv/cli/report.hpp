#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rvv/cli/scenario.hpp"
#include "rvv/patterns/patterns.hpp"
#include "rvv/schedule/anomaly.hpp"
#include "rvv/schedule/trace.hpp"

namespace rvv {

enum class ReportKind : std::uint8_t { Text, Machine };

struct ExpectResult {
  std::string key;
  std::string want;
  std::string got;
  bool ok = false;
};

/// Everything one run produced, ready to format.
struct RunReport {
  std::string scenario;
  EngineConfig config;
  Isolation default_iso = Isolation::ReadCommitted;
  std::uint64_t seed = 0;
  ExecutionTrace trace;
  AnomalyReport anomalies;

  struct Outcome {
    std::string name;
    PatternStatus status = PatternStatus::Incomplete;
    std::optional<std::int64_t> written;
    std::size_t attempts = 1;
  };
  std::vector<Outcome> outcomes;

  std::vector<ExpectResult> expects;

  bool all_expects_ok() const;
};

/// Aggregate over every explored schedule of one scenario.
struct SweepReport {
  std::string scenario;
  EngineConfig config;
  Isolation default_iso = Isolation::ReadCommitted;
  bool sampled = false;
  std::uint64_t seed = 0;
  std::size_t schedules = 0;
  std::size_t nominal_ops = 0;

  /// Distinct final states (items rendered `item=value`, comma-joined,
  /// sorted) with how many schedules produced each.
  std::vector<std::pair<std::string, std::size_t>> final_counts;
  std::size_t with_lost_updates = 0;
  std::size_t non_serializable = 0;

  struct Counterexample {
    std::string signature;  // e.g. "lost-update acc victim=B overwriter=A2"
    std::size_t schedule_index = 0;
    std::string ops;  // first-attempt operation labels, space-joined
  };
  std::vector<Counterexample> counterexamples;

  std::vector<ExpectResult> expects;

  bool all_expects_ok() const;
};

/// Text: aligned, human-oriented, optionally ANSI-colored. Machine:
/// bar-separated records, one per line, schema in README.md; never styled.
void write_run_report(std::ostream& out, const RunReport& report, ReportKind kind, bool color);
void write_sweep_report(std::ostream& out, const SweepReport& report, ReportKind kind, bool color);

std::string config_summary(const EngineConfig& config, Isolation default_iso);

}  // namespace rvv
