#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rvv/engine/engine.hpp"
#include "rvv/engine/store.hpp"
#include "rvv/engine/types.hpp"

namespace rvv {

/// One executed (or attempted) action. Blocked attempts and retries each get
/// their own step, so step count >= scheduled operation count.
struct TraceStep {
  enum class Action : std::uint8_t {
    None,
    Read,
    WriteBuf,   // write accepted into the transaction's buffer
    CondWrite,  // conditional write checked (cond_applied says which way)
    Validate,
    Commit,
    Abort,
    Tick,
    Deadlock,  // scheduler pseudo-step announcing a victim
    Skip,      // operation of an already-finished transaction, not executed
  };

  std::string label;   // operation token, e.g. "rA(x)", or "deadlock"
  std::string result;  // outcome text, deterministic

  StepStatus status = StepStatus::Ok;
  Err error = Err::None;
  Action action = Action::None;
  TxnId txn = kNoTxn;
  std::string txn_name;
  RowKey key;  // row touched, when the action names one

  std::optional<std::uint64_t> read_version_seq;  // Action::Read
  std::optional<CommitReceipt> receipt;           // Action::Commit
  bool cond_applied = false;                      // Action::CondWrite
  bool first_attempt = true;  // false when retrying a previously blocked op

  std::vector<std::string> blocked_after;  // txns blocked once this step ran
  std::string digest;                      // store digest after this step
};

const char* to_string(TraceStep::Action a);

/// Terminal facts about one engine transaction, keyed for the detectors.
struct TxnRecord {
  TxnId id = kNoTxn;
  std::string name;  // display name, e.g. "A" or "A2" for a split flow
  TxnState state = TxnState::Active;
  Err abort_reason = Err::None;
  std::map<RowKey, ReadObservation> observations;
  /// Step index of the last accepted write per row (buffer step, not commit).
  std::map<RowKey, std::size_t> last_write_step;
};

struct ExecutionTrace {
  std::vector<TraceStep> steps;
  std::vector<TxnRecord> txns;  // ordered by engine txn id
  Store final_store;
  bool stuck = false;  // live transactions remained but nothing could run
  std::string error;   // non-empty: setup or runaway failure, trace partial
  /// Chooser decisions that produced this schedule; replayable.
  std::vector<std::size_t> choices;

  const TxnRecord* find_txn(TxnId id) const;

  /// Line per step: `step#|op|result|store-digest`.
  std::string serialize() const;
};

}  // namespace rvv
