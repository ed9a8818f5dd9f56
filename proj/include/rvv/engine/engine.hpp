#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rvv/engine/lock_table.hpp"
#include "rvv/engine/store.hpp"
#include "rvv/engine/types.hpp"

namespace rvv {

/// One column mutation. Set installs an absolute value (a blind write when the
/// value came from an earlier transaction); Add is relative to the committed
/// value and therefore cannot lose a concurrent update.
struct ColumnUpdate {
  enum class Kind : std::uint8_t { Set, Add };

  std::string column;
  Kind kind = Kind::Set;
  std::int64_t amount = 0;

  static ColumnUpdate set(std::string column, std::int64_t value) {
    return {std::move(column), Kind::Set, value};
  }
  static ColumnUpdate add(std::string column, std::int64_t delta) {
    return {std::move(column), Kind::Add, delta};
  }
};

using ColumnUpdates = std::vector<ColumnUpdate>;

struct EngineConfig {
  CcMode mode = CcMode::Lscc;
  StampKind stamp = StampKind::Counter;

  /// Logical ticks per coarse-timestamp unit. The clock only advances via
  /// tick(), so commits between ticks share a stamp value.
  std::uint64_t clock_resolution_ticks = 1;

  /// ROWVERSION-style update protocol: writes take a U lock first and convert
  /// it to X in a separate scheduler step. Only meaningful in LSCC mode.
  bool update_lock_first = false;
};

struct ReadOut {
  std::int64_t value = 0;
  VersionStamp stamp;
  /// Index of the observed version within its row's history. Ground truth for
  /// lineage analysis even when stamps collide.
  std::uint64_t version_seq = 0;
};

struct WriteTicket {
  RowKey key;
  /// Column values the write-set now holds for this row.
  std::map<std::string, std::int64_t> pending;
};

struct CondOut {
  std::uint64_t rows_affected = 0;
  /// Stamp the condition was checked against (indeterminate under commit-scn
  /// stamping when another transaction holds a write claim).
  VersionStamp current_stamp;
  std::map<std::string, std::int64_t> pending;
};

struct AppliedRow {
  RowKey key;
  VersionStamp stamp;
  std::uint64_t version_seq = 0;
};

struct CommitReceipt {
  std::uint64_t commit_seq = 0;
  std::vector<AppliedRow> applied;
};

/// Last observation a transaction holds per row: the stamp it read and the
/// version index that stamp belonged to.
struct ReadObservation {
  VersionStamp stamp;
  std::uint64_t version_seq = 0;
};

/// In-memory transactional row store with pluggable concurrency control.
///
/// The engine is a sequential state machine: exactly one call runs at a time
/// and blocking is modeled, not performed. A call that cannot proceed returns
/// StepStatus::Blocked, parks the operation, and moves the transaction to
/// BLOCKED; the scheduler re-issues the same call after later state changes
/// to resume it. Deadlock detection is the scheduler's job too, via
/// detect_deadlock() after blocking events.
///
/// Concurrency control comes in two modes, fixed per engine instance:
///  - LSCC: S/U/X locks, strict two-phase. READ_COMMITTED drops fresh S locks
///    at statement end; REPEATABLE_READ and SERIALIZABLE hold them to txn end.
///  - MVCC: lock-free reads against the version chain. Writers claim a
///    per-row intent; a second writer blocks, then aborts with
///    SerializationConflict when the claim holder commits (first writer
///    wins), or proceeds when the holder aborts. SNAPSHOT transactions read
///    as of begin and additionally fail a write to any row committed past
///    their snapshot (first committer wins).
///
/// Optimistic transactions (begin_occ) bypass both: reads take no locks,
/// validate() checks the read set is still current, and the scheduler keeps
/// the validate-write-commit tail atomic.
///
/// Writes are buffered in the transaction's write-set and applied at commit;
/// a transaction's own reads see its buffered values. Each committed write
/// appends a Version to the row and stamps it per EngineConfig::stamp:
/// counter increments by one, coarse-timestamp takes the current clock value,
/// commit-scn takes the fresh global commit sequence.
class Engine {
 public:
  Engine(EngineConfig config, Store initial);

  const EngineConfig& config() const { return config_; }

  // --- transaction lifecycle ---

  /// mode must equal the engine's configured mode and iso must be valid for
  /// it; SNAPSHOT transactions capture their snapshot here.
  Result<TxnId> begin(Isolation iso, CcMode mode);

  /// Starts an optimistic transaction (lock-free reads, explicit validate).
  Result<TxnId> begin_occ();

  Result<CommitReceipt> commit(TxnId txn);
  VoidResult abort(TxnId txn);

  // --- data operations ---

  Result<ReadOut> read(TxnId txn, const RowKey& key, const std::string& column);

  Result<WriteTicket> write(TxnId txn, const RowKey& key, const ColumnUpdates& updates);

  /// Applies updates only when the row's current committed stamp matches
  /// expected (rows_affected 1); otherwise buffers nothing (rows_affected 0).
  /// An indeterminate current stamp matches nothing. Locking and
  /// first-writer rules are those of write().
  Result<CondOut> conditional_write(TxnId txn, const RowKey& key, const ColumnUpdates& updates,
                                    const VersionStamp& expected);

  /// OCC validation: succeeds when every read-set stamp still matches the
  /// row's current stamp. Failure aborts the transaction (ValidationFailed).
  /// A successful validation enters a critical section held until the
  /// transaction ends; a concurrent validate blocks on it, which keeps
  /// validate-then-write windows mutually exclusive.
  VoidResult validate(TxnId txn);

  // --- scheduler hooks ---

  /// Aborts and returns the youngest member of one wait-for cycle, if any.
  std::optional<TxnId> detect_deadlock();

  /// Runs detect_deadlock until the graph is acyclic; victims in abort order.
  std::vector<TxnId> resolve_deadlocks();

  /// Advances the coarse-timestamp clock by one tick.
  void tick();

  /// Seeds txn's read-set with an observation made outside this transaction
  /// (the committed read phase of a split user interaction). No locks are
  /// taken.
  void inherit_read(TxnId txn, const RowKey& key, const VersionStamp& stamp,
                    std::uint64_t version_seq);

  // --- inspection ---

  TxnState txn_state(TxnId txn) const;
  Err txn_abort_reason(TxnId txn) const;
  Isolation txn_isolation(TxnId txn) const;
  bool txn_is_occ(TxnId txn) const;
  std::uint64_t start_seq(TxnId txn) const;
  std::optional<std::uint64_t> snapshot_seq(TxnId txn) const;

  const std::map<RowKey, ReadObservation>& observations(TxnId txn) const;

  const Store& store() const { return store_; }
  std::string dump_store() const { return store_.dump(); }

  /// Newest committed value, bypassing any transaction context.
  std::optional<std::int64_t> peek(const RowKey& key, const std::string& column) const;

  /// Newest committed stamp as stored (no write-claim indeterminacy applied).
  std::optional<VersionStamp> committed_stamp(const RowKey& key) const;

  std::uint64_t commit_seq() const { return commit_seq_; }
  std::uint64_t clock_ticks() const { return ticks_; }

  /// Bumped on every effective state change; a scheduler can compare values
  /// to detect that a pass made no progress.
  std::uint64_t state_serial() const { return serial_; }

  std::vector<TxnId> blocked_txns() const;
  std::map<TxnId, std::set<TxnId>> wait_graph() const;

  /// Throws std::logic_error when an internal invariant is broken: lock
  /// compatibility, claim uniqueness, stamp monotonicity per row, terminal
  /// transactions holding resources.
  void check_invariants() const;

 private:
  enum class OpKind : std::uint8_t { Read, Write, CondWrite, Validate };

  /// A parked operation: enough to resume when the scheduler re-issues it.
  struct PendingOp {
    OpKind kind = OpKind::Read;
    RowKey key;
    std::string column;      // Read
    ColumnUpdates updates;   // Write / CondWrite
    VersionStamp expected;   // CondWrite
    bool upgrade_enqueued = false;  // update_lock_first: U held, X queued
  };

  struct Txn {
    TxnId id = kNoTxn;
    Isolation iso = Isolation::ReadCommitted;
    bool occ = false;
    TxnState state = TxnState::Active;
    Err abort_reason = Err::None;
    std::uint64_t start_seq = 0;
    std::uint64_t snapshot_seq = 0;
    std::map<RowKey, ReadObservation> read_set;
    std::map<RowKey, std::map<std::string, std::int64_t>> write_set;
    std::optional<PendingOp> pending;
  };

  struct Intent {
    TxnId holder = kNoTxn;
    std::vector<TxnId> waiters;  // FIFO
  };

  Txn* find_txn(TxnId id);
  const Txn* find_txn(TxnId id) const;

  /// Common entry check for data operations: resolves parked-op resumption
  /// and surfaces a pending abort reason exactly once. Returns nullptr and
  /// fills out when the operation already has its answer.
  template <class T>
  Txn* enter_op(TxnId id, OpKind kind, const RowKey& key, Result<T>* out);

  /// Outcome of the locking/claiming stage of a write-shaped operation.
  struct Gate {
    StepStatus status = StepStatus::Ok;
    Err error = Err::None;
  };
  Gate lscc_write_gate(Txn& t, const RowKey& key);
  Gate mvcc_write_gate(Txn& t, const RowKey& key);

  /// Current committed stamp as a reader sees it: indeterminate under
  /// commit-scn stamping while another transaction holds a write claim.
  VersionStamp visible_stamp(TxnId reader, const RowKey& key, const Version& v) const;
  bool other_claim_holder(TxnId reader, const RowKey& key) const;

  std::map<std::string, std::int64_t> apply_updates(const Txn& t, const RowKey& key,
                                                    const ColumnUpdates& updates,
                                                    const Version& base, bool* unknown) const;

  VersionStamp next_stamp(const RowKey& key, std::uint64_t new_commit_seq) const;

  void abort_internal(Txn& t, Err reason, bool keep_pending);
  void release_claims(Txn& t, bool committing_writes);
  void release_intent(const RowKey& key);
  void record_observation(Txn& t, const RowKey& key, const VersionStamp& stamp,
                          std::uint64_t version_seq);

  void bump() { ++serial_; }

  EngineConfig config_;
  Store store_;
  LockTable locks_;
  std::map<RowKey, Intent> intents_;
  std::map<TxnId, Txn> txns_;
  TxnId occ_critical_ = kNoTxn;
  TxnId next_txn_ = 1;
  std::uint64_t commit_seq_ = 0;
  std::uint64_t ticks_ = 0;
  std::uint64_t serial_ = 0;
};

}  // namespace rvv
