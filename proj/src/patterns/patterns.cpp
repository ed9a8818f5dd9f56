#include "rvv/patterns/patterns.hpp"

#include <utility>

namespace rvv {

const char* to_string(PatternStatus s) {
  switch (s) {
    case PatternStatus::Applied: return "APPLIED";
    case PatternStatus::RetriedApplied: return "RETRIED_APPLIED";
    case PatternStatus::ConflictDetected: return "CONFLICT_DETECTED";
    case PatternStatus::AbortedDeadlock: return "ABORTED_DEADLOCK";
    case PatternStatus::AbortedSerialization: return "ABORTED_SERIALIZATION";
    case PatternStatus::RetriesExhausted: return "RETRIES_EXHAUSTED";
    case PatternStatus::Incomplete: return "INCOMPLETE";
  }
  return "?";
}

Result<UserContext> capture_context(Engine& engine, const RowKey& key,
                                    const std::string& column) {
  auto b = engine.begin(Isolation::ReadCommitted, engine.config().mode);
  if (!b.ok()) return Result<UserContext>::fail(b.error);
  TxnId t = b.value;
  auto r = engine.read(t, key, column);
  if (!r.ok()) {
    engine.abort(t);
    return r.blocked() ? Result<UserContext>::block() : Result<UserContext>::fail(r.error);
  }
  UserContext ctx{key, column, r.value.value, r.value.stamp, r.value.version_seq};
  auto c = engine.commit(t);
  if (!c.ok()) {
    return c.blocked() ? Result<UserContext>::block() : Result<UserContext>::fail(c.error);
  }
  return Result<UserContext>::okay(std::move(ctx));
}

namespace {

void fill_status(TraceStep& ts, StepStatus st, Err e) {
  ts.status = st;
  ts.error = e;
  if (st == StepStatus::Blocked) {
    ts.result = "blocked";
  } else if (st == StepStatus::Failed) {
    ts.result = std::string("err=") + to_string(e);
  }
}

}  // namespace

PatternProgram::PatternProgram(std::string name, RowKey key, std::string column,
                               std::int64_t delta, std::size_t priority, std::size_t nominal)
    : Program(std::move(name)),
      key_(std::move(key)),
      column_(std::move(column)),
      delta_(delta),
      priority_(priority),
      nominal_(nominal) {}

std::size_t PatternProgram::new_phase(std::string display) {
  phase_display_.push_back(std::move(display));
  return phase_display_.size() - 1;
}

void PatternProgram::add(std::size_t phase, std::string label,
                         std::function<void(Engine&, TraceStep&)> run) {
  entries_.push_back(Entry{phase, std::move(label), std::move(run)});
}

TxnId PatternProgram::phase_txn(std::size_t phase) const {
  auto it = phase_txn_.find(phase);
  return it == phase_txn_.end() ? kNoTxn : it->second;
}

bool PatternProgram::ensure_begun(Engine& engine, std::size_t phase, Isolation iso, bool occ,
                                  TraceStep& ts) {
  auto it = phase_txn_.find(phase);
  if (it != phase_txn_.end()) {
    ts.txn = it->second;
    return true;
  }
  Result<TxnId> b = occ ? engine.begin_occ() : engine.begin(iso, engine.config().mode);
  if (!b.ok()) {
    dead_ = true;
    ts.status = StepStatus::Failed;
    ts.error = b.error;
    ts.result = std::string("err=") + to_string(b.error);
    return false;
  }
  phase_txn_[phase] = b.value;
  ts.txn = b.value;
  return true;
}

std::vector<std::pair<TxnId, std::string>> PatternProgram::txn_names() const {
  std::vector<std::pair<TxnId, std::string>> out;
  for (const auto& [phase, id] : phase_txn_) out.emplace_back(id, phase_display_[phase]);
  return out;
}

bool PatternProgram::drainable(const Engine& engine) const {
  if (done()) return false;
  if (dead_) return true;
  if (parked_serial_.has_value()) return false;
  TxnId t = phase_txn(entries_[next_].phase);
  if (t == kNoTxn) return false;
  TxnState st = engine.txn_state(t);
  return st == TxnState::Committed || st == TxnState::Aborted;
}

TraceStep PatternProgram::step(Engine& engine) {
  const std::size_t idx = next_;
  const std::size_t phase = entries_[idx].phase;
  auto fn = entries_[idx].run;  // copy: a retry hook may grow entries_ mid-call

  TraceStep ts;
  ts.label = entries_[idx].label;
  ts.txn_name = phase_display_[phase];
  ts.txn = phase_txn(phase);
  ts.first_attempt = !parked_serial_.has_value();

  auto skip = [&]() {
    ts.action = TraceStep::Action::Skip;
    ts.result = "skipped";
    ++next_;
    note_attempt(engine, StepStatus::Ok);
  };

  if (dead_) {
    skip();
    return ts;
  }
  if (ts.txn != kNoTxn && !parked_serial_.has_value()) {
    TxnState st = engine.txn_state(ts.txn);
    if (st == TxnState::Committed || st == TxnState::Aborted) {
      skip();
      return ts;
    }
  }

  fn(engine, ts);
  if (ts.status != StepStatus::Blocked) ++next_;
  note_attempt(engine, ts.status);

  if (ts.status == StepStatus::Failed) {
    switch (ts.error) {
      case Err::DeadlockVictim:
        on_phase_aborted(engine, PatternStatus::AbortedDeadlock, phase);
        break;
      case Err::SerializationConflict:
        on_phase_aborted(engine, PatternStatus::AbortedSerialization, phase);
        break;
      case Err::ValidationFailed:
        outcome_.status = PatternStatus::ConflictDetected;
        break;
      default:
        break;
    }
  }
  return ts;
}

void PatternProgram::on_phase_aborted(Engine&, PatternStatus resolution, std::size_t) {
  outcome_.status = resolution;
}

void PatternProgram::run_read(Engine& engine, std::size_t phase, TraceStep& ts,
                              const std::function<void(const ReadOut&)>& on_ok) {
  TxnId t = phase_txn(phase);
  ts.action = TraceStep::Action::Read;
  ts.key = key_;
  auto r = engine.read(t, key_, column_);
  fill_status(ts, r.status, r.error);
  if (r.ok()) {
    ts.read_version_seq = r.value.version_seq;
    ts.result = "ok " + column_ + "=" + std::to_string(r.value.value) + " " +
                r.value.stamp.to_string();
    if (on_ok) on_ok(r.value);
  }
}

void PatternProgram::run_write(Engine& engine, std::size_t phase, const ColumnUpdates& updates,
                               TraceStep& ts) {
  TxnId t = phase_txn(phase);
  ts.action = TraceStep::Action::WriteBuf;
  ts.key = key_;
  auto r = engine.write(t, key_, updates);
  fill_status(ts, r.status, r.error);
  if (r.ok()) {
    std::string cols;
    for (const auto& [col, val] : r.value.pending) {
      if (!cols.empty()) cols += ",";
      cols += col + "=" + std::to_string(val);
    }
    ts.result = "ok buffered " + cols;
    auto it = r.value.pending.find(column_);
    if (it != r.value.pending.end()) pending_written_ = it->second;
  }
}

void PatternProgram::run_cond_write(Engine& engine, std::size_t phase, std::int64_t value,
                                    const VersionStamp& expected, TraceStep& ts) {
  TxnId t = phase_txn(phase);
  ts.action = TraceStep::Action::CondWrite;
  ts.key = key_;
  ColumnUpdates u{ColumnUpdate::set(column_, value)};
  auto r = engine.conditional_write(t, key_, u, expected);
  fill_status(ts, r.status, r.error);
  if (r.ok()) {
    ts.cond_applied = r.value.rows_affected == 1;
    ts.result = "ok rows=" + std::to_string(r.value.rows_affected) +
                " checked=" + r.value.current_stamp.to_string();
    if (ts.cond_applied) pending_written_ = value;
  }
}

void PatternProgram::run_validate(Engine& engine, std::size_t phase, TraceStep& ts) {
  TxnId t = phase_txn(phase);
  ts.action = TraceStep::Action::Validate;
  auto r = engine.validate(t);
  fill_status(ts, r.status, r.error);
  if (r.ok()) ts.result = "ok";
}

void PatternProgram::run_commit(Engine& engine, std::size_t phase, TraceStep& ts,
                                const std::function<void()>& on_ok) {
  TxnId t = phase_txn(phase);
  ts.action = TraceStep::Action::Commit;
  auto r = engine.commit(t);
  fill_status(ts, r.status, r.error);
  if (r.ok()) {
    ts.receipt = r.value;
    ts.result = "ok commit=" + std::to_string(r.value.commit_seq);
    if (on_ok) on_ok();
  }
}

// --- split interaction, blind write-back ---

SplitBlindProgram::SplitBlindProgram(std::string name, RowKey key, std::string column,
                                     std::int64_t delta, std::size_t priority)
    : PatternProgram(std::move(name), std::move(key), std::move(column), delta, priority, 4) {
  std::size_t p1 = new_phase(name_ + "1");
  std::size_t p2 = new_phase(name_ + "2");
  add(p1, "r" + name_ + "1(" + key_.id + ")", [this, p1](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p1, Isolation::ReadCommitted, false, ts)) return;
    run_read(e, p1, ts, [this](const ReadOut& r) {
      ctx_ = UserContext{key_, column_, r.value, r.stamp, r.version_seq};
    });
  });
  add(p1, "c" + name_ + "1", [this, p1](Engine& e, TraceStep& ts) {
    run_commit(e, p1, ts, nullptr);
  });
  add(p2, "w" + name_ + "2(" + key_.id + ")", [this, p2](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p2, Isolation::ReadCommitted, false, ts)) return;
    // the write resolves against the stale context, not the current row
    e.inherit_read(phase_txn(p2), key_, ctx_.stamp, ctx_.version_seq);
    ColumnUpdates u{ColumnUpdate::set(column_, ctx_.value + delta_)};
    run_write(e, p2, u, ts);
  });
  add(p2, "c" + name_ + "2", [this, p2](Engine& e, TraceStep& ts) {
    run_commit(e, p2, ts, [this] {
      outcome_.status = PatternStatus::Applied;
      outcome_.written = pending_written_;
    });
  });
}

// --- split interaction, stamp-checked write-back ---

SplitConditionalProgram::SplitConditionalProgram(std::string name, RowKey key, std::string column,
                                                 std::int64_t delta, std::size_t priority)
    : PatternProgram(std::move(name), std::move(key), std::move(column), delta, priority, 4) {
  std::size_t p1 = new_phase(name_ + "1");
  std::size_t p2 = new_phase(name_ + "2");
  add(p1, "r" + name_ + "1(" + key_.id + ")", [this, p1](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p1, Isolation::ReadCommitted, false, ts)) return;
    run_read(e, p1, ts, [this](const ReadOut& r) {
      ctx_ = UserContext{key_, column_, r.value, r.stamp, r.version_seq};
    });
  });
  add(p1, "c" + name_ + "1", [this, p1](Engine& e, TraceStep& ts) {
    run_commit(e, p1, ts, nullptr);
  });
  add(p2, "w" + name_ + "2(" + key_.id + ",s)", [this, p2](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p2, Isolation::ReadCommitted, false, ts)) return;
    e.inherit_read(phase_txn(p2), key_, ctx_.stamp, ctx_.version_seq);
    run_cond_write(e, p2, ctx_.value + delta_, ctx_.stamp, ts);
    if (ts.status == StepStatus::Ok) {
      applied_ = ts.cond_applied;
      if (!applied_) outcome_.status = PatternStatus::ConflictDetected;
    }
  });
  add(p2, "c" + name_ + "2", [this, p2](Engine& e, TraceStep& ts) {
    run_commit(e, p2, ts, [this] {
      if (applied_) {
        outcome_.status = PatternStatus::Applied;
        outcome_.written = pending_written_;
      }
    });
  });
}

// --- relative update in one transaction ---

SensitiveProgram::SensitiveProgram(std::string name, RowKey key, std::string column,
                                   std::int64_t delta, std::size_t priority)
    : PatternProgram(std::move(name), std::move(key), std::move(column), delta, priority, 2) {
  std::size_t p = new_phase(name_);
  add(p, "w" + name_ + "(" + key_.id + ")", [this, p](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p, Isolation::ReadCommitted, false, ts)) return;
    ColumnUpdates u{ColumnUpdate::add(column_, delta_)};
    run_write(e, p, u, ts);
  });
  add(p, "c" + name_, [this, p](Engine& e, TraceStep& ts) {
    run_commit(e, p, ts, [this] {
      outcome_.status = PatternStatus::Applied;
      outcome_.written = pending_written_;
    });
  });
}

// --- read then absolute write in one transaction ---

SelectUpdateProgram::SelectUpdateProgram(std::string name, RowKey key, std::string column,
                                         std::int64_t delta, Isolation iso, std::size_t priority)
    : PatternProgram(std::move(name), std::move(key), std::move(column), delta, priority, 3) {
  std::size_t p = new_phase(name_);
  add(p, "r" + name_ + "(" + key_.id + ")", [this, p, iso](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p, iso, false, ts)) return;
    run_read(e, p, ts, [this](const ReadOut& r) { seen_ = r.value; });
  });
  add(p, "w" + name_ + "(" + key_.id + ")", [this, p](Engine& e, TraceStep& ts) {
    ColumnUpdates u{ColumnUpdate::set(column_, seen_ + delta_)};
    run_write(e, p, u, ts);
  });
  add(p, "c" + name_, [this, p](Engine& e, TraceStep& ts) {
    run_commit(e, p, ts, [this] {
      outcome_.status = PatternStatus::Applied;
      outcome_.written = pending_written_;
    });
  });
}

// --- reselect under stronger isolation, compare stamps, retry on movement ---

ReselectProgram::ReselectProgram(std::string name, RowKey key, std::string column,
                                 std::int64_t delta, Isolation strong_iso,
                                 std::size_t max_retries, std::size_t priority)
    : PatternProgram(std::move(name), std::move(key), std::move(column), delta, priority, 5),
      strong_iso_(strong_iso),
      max_retries_(max_retries),
      expected_(VersionStamp::indeterminate(StampKind::Counter)) {
  std::size_t p1 = new_phase(name_ + "1");
  add(p1, "r" + name_ + "1(" + key_.id + ")", [this, p1](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p1, Isolation::ReadCommitted, false, ts)) return;
    run_read(e, p1, ts, [this](const ReadOut& r) {
      expected_ = r.stamp;
      current_ = r.value;
    });
  });
  add(p1, "c" + name_ + "1", [this, p1](Engine& e, TraceStep& ts) {
    run_commit(e, p1, ts, nullptr);
  });
  add_attempt();
}

void ReselectProgram::add_attempt() {
  ++attempts_started_;
  outcome_.attempts = attempts_started_;
  std::size_t ph = new_phase(name_ + std::to_string(attempts_started_ + 1));
  std::string n = std::to_string(attempts_started_ + 1);
  add(ph, "r" + name_ + n + "(" + key_.id + ")", [this, ph](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, ph, strong_iso_, false, ts)) return;
    std::optional<ReadOut> got;
    run_read(e, ph, ts, [&](const ReadOut& r) { got = r; });
    if (!got) return;
    if (expected_.matches(got->stamp)) {
      current_ = got->value;
      ts.result += " stamp-ok";
      return;
    }
    // The row moved since the user looked at it. Drop this transaction,
    // adopt what is there now and go around again if budget remains.
    outcome_.stamp_conflicts.emplace_back(expected_, got->stamp);
    expected_ = got->stamp;
    current_ = got->value;
    ts.result += " stamp-mismatch";
    e.abort(phase_txn(ph));
    if (attempts_started_ <= max_retries_) {
      add_attempt();
    } else {
      outcome_.status = PatternStatus::RetriesExhausted;
    }
  });
  add(ph, "w" + name_ + n + "(" + key_.id + ")", [this, ph](Engine& e, TraceStep& ts) {
    ColumnUpdates u{ColumnUpdate::set(column_, current_ + delta_)};
    run_write(e, ph, u, ts);
  });
  add(ph, "c" + name_ + n, [this, ph](Engine& e, TraceStep& ts) {
    run_commit(e, ph, ts, [this] {
      outcome_.status = attempts_started_ > 1 ? PatternStatus::RetriedApplied
                                              : PatternStatus::Applied;
      outcome_.written = pending_written_;
    });
  });
}

void ReselectProgram::on_phase_aborted(Engine&, PatternStatus resolution, std::size_t phase) {
  if (phase == 0) {
    // Capture phase died before the user saw anything; nothing to retry.
    outcome_.status = resolution;
    return;
  }
  if (attempts_started_ <= max_retries_) {
    add_attempt();
    outcome_.status = PatternStatus::Incomplete;
  } else {
    outcome_.status = resolution;
  }
}

// --- optimistic read/validate/write ---

OccUpdateProgram::OccUpdateProgram(std::string name, RowKey key, std::string column,
                                   std::int64_t delta, std::size_t priority)
    : PatternProgram(std::move(name), std::move(key), std::move(column), delta, priority, 4) {
  std::size_t p = new_phase(name_);
  add(p, "r" + name_ + "(" + key_.id + ")", [this, p](Engine& e, TraceStep& ts) {
    if (!ensure_begun(e, p, Isolation::ReadCommitted, true, ts)) return;
    run_read(e, p, ts, [this](const ReadOut& r) { seen_ = r.value; });
  });
  add(p, "val" + name_, [this, p](Engine& e, TraceStep& ts) {
    run_validate(e, p, ts);
  });
  add(p, "w" + name_ + "(" + key_.id + ")", [this, p](Engine& e, TraceStep& ts) {
    ColumnUpdates u{ColumnUpdate::set(column_, seen_ + delta_)};
    run_write(e, p, u, ts);
  });
  add(p, "c" + name_, [this, p](Engine& e, TraceStep& ts) {
    run_commit(e, p, ts, [this] {
      outcome_.status = PatternStatus::Applied;
      outcome_.written = pending_written_;
    });
  });
}

}  // namespace rvv
