#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rvv/engine/engine.hpp"
#include "rvv/schedule/program.hpp"

namespace rvv {

/// What a user-facing flow keeps from its read phase: the value it showed
/// the user and the row stamp it can verify against later.
struct UserContext {
  RowKey key;
  std::string column;
  std::int64_t value = 0;
  VersionStamp stamp;
  std::uint64_t version_seq = 0;
};

/// Reads key/column in a committed read-only transaction (the first half of
/// a split user interaction) and returns what the user saw.
Result<UserContext> capture_context(Engine& engine, const RowKey& key,
                                    const std::string& column);

enum class PatternStatus : std::uint8_t {
  Applied,
  RetriedApplied,    // reselect succeeded after at least one stamp conflict
  ConflictDetected,  // the row had moved on; nothing was written
  AbortedDeadlock,
  AbortedSerialization,
  RetriesExhausted,  // reselect gave up within its attempt budget
  Incomplete,        // never reached a terminal step
};

const char* to_string(PatternStatus s);

struct PatternOutcome {
  PatternStatus status = PatternStatus::Incomplete;
  std::optional<std::int64_t> written;  // value committed by this flow, if any
  std::size_t attempts = 1;
  /// (expected, found) pairs from failed stamp comparisons.
  std::vector<std::pair<VersionStamp, VersionStamp>> stamp_conflicts;
};

/// Chassis for the user-flow programs: an ordered list of step thunks
/// grouped into phases, one engine transaction per phase. Steps of a phase
/// whose transaction already ended are skipped (a parked step is reissued
/// once so the abort reason lands in the trace). A phase abort by deadlock
/// or write-write conflict resolves the whole flow unless a subclass turns
/// it into a retry.
class PatternProgram : public Program {
 public:
  bool done() const override { return next_ >= entries_.size(); }
  std::size_t nominal_size() const override { return nominal_; }
  std::size_t next_priority() const override { return priority_; }
  TraceStep step(Engine& engine) override;
  bool drainable(const Engine& engine) const override;
  std::vector<std::pair<TxnId, std::string>> txn_names() const override;

  const PatternOutcome& outcome() const { return outcome_; }

 protected:
  PatternProgram(std::string name, RowKey key, std::string column, std::int64_t delta,
                 std::size_t priority, std::size_t nominal);

  struct Entry {
    std::size_t phase = 0;
    std::string label;
    std::function<void(Engine&, TraceStep&)> run;
  };

  /// Registers a phase and the display name of its transaction.
  std::size_t new_phase(std::string display);
  void add(std::size_t phase, std::string label, std::function<void(Engine&, TraceStep&)> run);

  TxnId phase_txn(std::size_t phase) const;
  /// Begins the phase's transaction on first use. On failure marks the
  /// program dead and fills the step; returns false.
  bool ensure_begun(Engine& engine, std::size_t phase, Isolation iso, bool occ, TraceStep& ts);

  /// Maps a phase abort surfaced as a failed step onto the outcome;
  /// ReselectProgram overrides this to spend a retry instead.
  virtual void on_phase_aborted(Engine& engine, PatternStatus resolution, std::size_t phase);

  // engine-call helpers; each fills status/error/result and the action fields
  void run_read(Engine& engine, std::size_t phase, TraceStep& ts,
                const std::function<void(const ReadOut&)>& on_ok);
  void run_write(Engine& engine, std::size_t phase, const ColumnUpdates& updates, TraceStep& ts);
  void run_cond_write(Engine& engine, std::size_t phase, std::int64_t value,
                      const VersionStamp& expected, TraceStep& ts);
  void run_validate(Engine& engine, std::size_t phase, TraceStep& ts);
  void run_commit(Engine& engine, std::size_t phase, TraceStep& ts,
                  const std::function<void()>& on_ok);

  RowKey key_;
  std::string column_;
  std::int64_t delta_ = 0;
  std::size_t priority_ = 0;
  std::size_t nominal_ = 0;
  PatternOutcome outcome_;

  std::vector<Entry> entries_;
  std::size_t next_ = 0;
  std::vector<std::string> phase_display_;
  std::map<std::size_t, TxnId> phase_txn_;
  std::optional<std::int64_t> pending_written_;  // buffered value for column_
  bool dead_ = false;
};

/// Anti-pattern: write back a value computed from the earlier committed
/// read, ignoring whatever the row holds now.
class SplitBlindProgram : public PatternProgram {
 public:
  SplitBlindProgram(std::string name, RowKey key, std::string column, std::int64_t delta,
                    std::size_t priority);

 private:
  UserContext ctx_;
};

/// Conditional update: apply only when the row still carries the stamp the
/// user saw; a changed stamp comes back as CONFLICT_DETECTED.
class SplitConditionalProgram : public PatternProgram {
 public:
  SplitConditionalProgram(std::string name, RowKey key, std::string column, std::int64_t delta,
                          std::size_t priority);

 private:
  UserContext ctx_;
  bool applied_ = false;
};

/// Relative update in one transaction (value = value + delta); the write
/// lock makes the addend resolve against the current committed value.
class SensitiveProgram : public PatternProgram {
 public:
  SensitiveProgram(std::string name, RowKey key, std::string column, std::int64_t delta,
                   std::size_t priority);
};

/// Read then write an absolute value in one transaction.
class SelectUpdateProgram : public PatternProgram {
 public:
  SelectUpdateProgram(std::string name, RowKey key, std::string column, std::int64_t delta,
                      Isolation iso, std::size_t priority);

 private:
  std::int64_t seen_ = 0;
};

/// Re-read at a stronger isolation level and compare stamps before
/// updating; on mismatch drop the transaction, adopt the fresh stamp and
/// try again within the attempt budget. Deadlock and conflict aborts spend
/// retries from the same budget.
class ReselectProgram : public PatternProgram {
 public:
  ReselectProgram(std::string name, RowKey key, std::string column, std::int64_t delta,
                  Isolation strong_iso, std::size_t max_retries, std::size_t priority);

 private:
  void add_attempt();
  void on_phase_aborted(Engine& engine, PatternStatus resolution, std::size_t phase) override;

  Isolation strong_iso_;
  std::size_t max_retries_;
  std::size_t attempts_started_ = 0;
  VersionStamp expected_;  // starts indeterminate; set by the capture read
  std::int64_t current_ = 0;
};

/// Optimistic flow: lock-free read, validate the read set, write, commit.
class OccUpdateProgram : public PatternProgram {
 public:
  OccUpdateProgram(std::string name, RowKey key, std::string column, std::int64_t delta,
                   std::size_t priority);

 private:
  std::int64_t seen_ = 0;
};

}  // namespace rvv
