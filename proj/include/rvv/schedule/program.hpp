#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rvv/engine/engine.hpp"
#include "rvv/schedule/history.hpp"
#include "rvv/schedule/trace.hpp"

namespace rvv {

/// Maps a history item name onto a stored row and column.
struct ItemBinding {
  RowKey key;
  std::string column;

  bool operator==(const ItemBinding&) const = default;
};

using ItemBindings = std::map<std::string, ItemBinding>;

/// Binding used when a history names an item with no explicit mapping:
/// table "items", row id = item name, column "val".
ItemBinding default_binding(const std::string& item);

/// One scheduled actor: a sequence of engine calls issued one per step().
/// The scheduler owns interleaving; a program only advances its own script.
class Program {
 public:
  virtual ~Program() = default;

  const std::string& name() const { return name_; }
  virtual bool done() const = 0;

  /// Operation count of the script itself. Blocked retries, abort surfacing
  /// and skips add dynamic steps beyond this.
  virtual std::size_t nominal_size() const = 0;

  /// Scheduling rank of the next step; the default chooser runs the lowest
  /// runnable rank, which reproduces history order for history programs.
  virtual std::size_t next_priority() const = 0;

  /// Issues the next engine call. Fills everything in the TraceStep except
  /// digest and blocked_after, which the executor stamps afterwards.
  virtual TraceStep step(Engine& engine) = 0;

  /// True when the next step is a pure skip (transaction already finished,
  /// no abort reason left to surface). The executor drains these eagerly so
  /// they never become scheduling decisions.
  virtual bool drainable(const Engine& engine) const = 0;

  /// Engine transactions this program created, with display names.
  virtual std::vector<std::pair<TxnId, std::string>> txn_names() const = 0;

  /// Set when the last attempt parked; cleared by any non-blocked step.
  /// Value is the engine serial after that attempt: the program is worth
  /// retrying only once the serial has moved on.
  std::optional<std::uint64_t> parked_serial() const { return parked_serial_; }

 protected:
  explicit Program(std::string name) : name_(std::move(name)) {}

  void note_attempt(const Engine& engine, StepStatus status) {
    if (status == StepStatus::Blocked) {
      parked_serial_ = engine.state_serial();
    } else {
      parked_serial_.reset();
    }
  }

  std::string name_;
  std::optional<std::uint64_t> parked_serial_;
};

/// Runs one declared transaction's slice of a parsed history.
///
/// Write values: a sensitive write adds delta to the stored value; a blind
/// write sets (last own read of the item) + delta. Without an explicit
/// write= annotation, a write is blind iff the program read the item
/// earlier, else sensitive. A conditional write expects the stamp of the
/// last own read and sets its value + delta.
///
/// OCC transactions whose script has no terminal operation commit
/// themselves right after their last operation.
class HistoryTxnProgram : public Program {
 public:
  /// ops: this txn's operations; priorities: each op's index in the full
  /// history, which next_priority() exposes for history-order scheduling.
  HistoryTxnProgram(TxnDecl decl, std::vector<Operation> ops,
                    std::vector<std::size_t> priorities, ItemBindings bindings,
                    Isolation default_iso, CcMode engine_mode);

  bool done() const override { return next_ >= ops_.size(); }
  std::size_t nominal_size() const override { return ops_.size(); }
  std::size_t next_priority() const override;
  TraceStep step(Engine& engine) override;
  bool drainable(const Engine& engine) const override;
  std::vector<std::pair<TxnId, std::string>> txn_names() const override;

  TxnId txn() const { return txn_; }

 private:
  struct ReadMemo {
    std::int64_t value = 0;
    VersionStamp stamp;
  };

  const ItemBinding& binding(const std::string& item) const;
  bool write_is_blind(std::size_t op_index) const;
  TraceStep fail_step(const Operation& op, Err error, std::string result);

  TxnDecl decl_;
  std::vector<Operation> ops_;
  std::vector<std::size_t> priorities_;
  ItemBindings bindings_;
  Isolation iso_;
  CcMode engine_mode_;

  std::map<std::string, ReadMemo> last_read_;
  std::size_t next_ = 0;
  TxnId txn_ = kNoTxn;
  bool began_ = false;
  bool dead_ = false;  // unrecoverable program error; remaining ops skip
  /// Index of the appended self-commit of an OCC txn, if one was added.
  std::size_t implicit_from_ = static_cast<std::size_t>(-1);
};

/// Advances the engine clock once.
class TickProgram : public Program {
 public:
  TickProgram(std::size_t priority);

  bool done() const override { return done_; }
  std::size_t nominal_size() const override { return 1; }
  std::size_t next_priority() const override { return priority_; }
  TraceStep step(Engine& engine) override;
  bool drainable(const Engine&) const override { return false; }
  std::vector<std::pair<TxnId, std::string>> txn_names() const override { return {}; }

 private:
  std::size_t priority_;
  bool done_ = false;
};

}  // namespace rvv
