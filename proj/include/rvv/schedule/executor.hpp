#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rvv/engine/engine.hpp"
#include "rvv/schedule/history.hpp"
#include "rvv/schedule/program.hpp"
#include "rvv/schedule/trace.hpp"

namespace rvv {

/// Picks which runnable program steps next. `choosable` lists program
/// indices in ascending order; the return value is a position within it.
/// Returning nullopt abandons the run (recorded as a trace error).
class Chooser {
 public:
  virtual ~Chooser() = default;
  virtual std::optional<std::size_t> choose(
      const std::vector<std::size_t>& choosable,
      const std::vector<std::unique_ptr<Program>>& programs) = 0;
};

/// Lowest next_priority() wins; ties go to the lower program index. For
/// history programs this reproduces the written history order, retrying
/// parked operations as soon as anything changed.
class HistoryOrderChooser : public Chooser {
 public:
  std::optional<std::size_t> choose(
      const std::vector<std::size_t>& choosable,
      const std::vector<std::unique_ptr<Program>>& programs) override;
};

/// Follows a fixed program-index script, then falls back to history order.
/// A script entry naming a program that is not currently runnable aborts
/// the run; scripts are for pinned-down scenarios, not exploration.
class ScriptChooser : public Chooser {
 public:
  explicit ScriptChooser(std::vector<std::size_t> program_order);
  std::optional<std::size_t> choose(
      const std::vector<std::size_t>& choosable,
      const std::vector<std::unique_ptr<Program>>& programs) override;

 private:
  std::vector<std::size_t> script_;
  std::size_t pos_ = 0;
};

/// Replays a recorded choice prefix, then always picks position 0. Records
/// the number of alternatives at every decision, which is what the
/// exhaustive enumerator needs to branch.
class ReplayChooser : public Chooser {
 public:
  explicit ReplayChooser(std::vector<std::size_t> prefix);
  std::optional<std::size_t> choose(
      const std::vector<std::size_t>& choosable,
      const std::vector<std::unique_ptr<Program>>& programs) override;

  const std::vector<std::size_t>& decision_sizes() const { return sizes_; }

 private:
  std::vector<std::size_t> prefix_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> sizes_;
};

/// Deterministic 64-bit generator (splitmix64). Self-contained so sampled
/// schedules are reproducible across platforms and library versions.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

class RandomChooser : public Chooser {
 public:
  explicit RandomChooser(std::uint64_t seed) : rng_(seed) {}
  std::optional<std::size_t> choose(
      const std::vector<std::size_t>& choosable,
      const std::vector<std::unique_ptr<Program>>& programs) override;

 private:
  SplitMix64 rng_;
};

struct ExecOptions {
  std::size_t max_steps = 100000;
  /// Run the engine's internal consistency check after every step; the
  /// check throws on violation.
  bool check_invariants_each_step = false;
};

/// Steps the programs against the engine until all are done, recording one
/// TraceStep per attempt. Blocked programs are retried once the engine has
/// changed; deadlock resolution runs after every blocked attempt and when
/// nothing is runnable. The engine must be fresh (no prior transactions).
ExecutionTrace execute_programs(const std::vector<std::unique_ptr<Program>>& programs,
                                Engine& engine, Chooser& chooser,
                                const ExecOptions& options = {});

/// Builds one program per declared transaction (plus one per tick) from a
/// parsed history. default_iso applies to transactions without iso=.
std::vector<std::unique_ptr<Program>> history_programs(const History& history,
                                                       Isolation default_iso,
                                                       const ItemBindings& bindings,
                                                       CcMode engine_mode);

/// Empty string when the history can run against this engine and store:
/// every referenced item resolves to an existing row, declared modes match
/// the engine, isolation levels are valid, blind writes have a read to
/// draw from.
std::string validate_history_setup(const History& history, const EngineConfig& config,
                                   Isolation default_iso, const ItemBindings& bindings,
                                   const Store& initial);

/// Runs a history in written order on a private engine. Setup problems
/// come back as a trace with `error` set and no steps.
ExecutionTrace execute_history(const History& history, const EngineConfig& config,
                               Isolation default_iso, const ItemBindings& bindings,
                               const Store& initial, const ExecOptions& options = {});

/// Fresh programs for one run; called once per explored schedule.
using ProgramFactory = std::function<std::vector<std::unique_ptr<Program>>()>;

/// Peek at each finished run before its programs are torn down (pattern
/// outcomes live on the programs).
using TraceObserver =
    std::function<void(const std::vector<std::unique_ptr<Program>>&, const ExecutionTrace&)>;

struct EnumOptions {
  /// Exhaustive exploration refuses factories above this many nominal ops.
  std::size_t max_nominal_ops = 12;
  ExecOptions exec;
};

struct Enumeration {
  std::vector<ExecutionTrace> traces;
  bool bound_exceeded = false;
  std::size_t nominal_ops = 0;
  std::string error;
};

/// Depth-first exploration of every schedule the chooser could produce,
/// one run per distinct choice sequence. Each run gets a fresh engine
/// seeded with `initial`.
Enumeration enumerate_schedules(const ProgramFactory& factory, const EngineConfig& config,
                                const Store& initial, const EnumOptions& options = {},
                                const TraceObserver& observer = {});

/// Exactly `count` runs under seeded random scheduling; repeats possible.
std::vector<ExecutionTrace> sample_schedules(const ProgramFactory& factory,
                                             const EngineConfig& config, const Store& initial,
                                             std::uint64_t seed, std::size_t count,
                                             const ExecOptions& options = {},
                                             const TraceObserver& observer = {});

}  // namespace rvv
