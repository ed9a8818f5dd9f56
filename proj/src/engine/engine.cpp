#include "rvv/engine/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace rvv {

Engine::Engine(EngineConfig config, Store initial)
    : config_(config), store_(std::move(initial)) {
  if (config_.clock_resolution_ticks == 0) config_.clock_resolution_ticks = 1;
}

Engine::Txn* Engine::find_txn(TxnId id) {
  auto it = txns_.find(id);
  return it == txns_.end() ? nullptr : &it->second;
}

const Engine::Txn* Engine::find_txn(TxnId id) const {
  auto it = txns_.find(id);
  return it == txns_.end() ? nullptr : &it->second;
}

// --- lifecycle ---

Result<TxnId> Engine::begin(Isolation iso, CcMode mode) {
  if (mode != config_.mode || !isolation_valid_for(iso, mode)) {
    return Result<TxnId>::fail(Err::InvalidIsolationForMode);
  }
  TxnId id = next_txn_++;
  Txn t;
  t.id = id;
  t.iso = iso;
  t.start_seq = id;
  t.snapshot_seq = commit_seq_;
  txns_.emplace(id, std::move(t));
  bump();
  return Result<TxnId>::okay(id);
}

Result<TxnId> Engine::begin_occ() {
  TxnId id = next_txn_++;
  Txn t;
  t.id = id;
  t.iso = Isolation::ReadCommitted;  // nominal; OCC takes no locks anyway
  t.occ = true;
  t.start_seq = id;
  t.snapshot_seq = commit_seq_;
  txns_.emplace(id, std::move(t));
  bump();
  return Result<TxnId>::okay(id);
}

Result<CommitReceipt> Engine::commit(TxnId txn) {
  Txn* t = find_txn(txn);
  if (t == nullptr || t->state != TxnState::Active) {
    return Result<CommitReceipt>::fail(Err::InvalidState);
  }

  CommitReceipt receipt;
  receipt.commit_seq = ++commit_seq_;
  for (const auto& [key, cols] : t->write_set) {
    RowVersions* rv = store_.find_mut(key);
    Version v;
    v.columns = cols;
    v.stamp = next_stamp(key, receipt.commit_seq);
    v.commit_seq = receipt.commit_seq;
    v.producer = txn;
    rv->versions.push_back(std::move(v));
    receipt.applied.push_back(
        {key, rv->versions.back().stamp, rv->versions.size() - 1});
  }

  release_claims(*t, /*committing_writes=*/true);
  std::vector<TxnId> granted;
  locks_.release_all(txn, &granted);
  if (occ_critical_ == txn) occ_critical_ = kNoTxn;
  t->state = TxnState::Committed;
  t->pending.reset();
  bump();
  return Result<CommitReceipt>::okay(std::move(receipt));
}

VoidResult Engine::abort(TxnId txn) {
  Txn* t = find_txn(txn);
  if (t == nullptr ||
      (t->state != TxnState::Active && t->state != TxnState::Blocked)) {
    return VoidResult::fail(Err::InvalidState);
  }
  abort_internal(*t, Err::None, /*keep_pending=*/false);
  return VoidResult::okay({});
}

void Engine::abort_internal(Txn& t, Err reason, bool keep_pending) {
  release_claims(t, /*committing_writes=*/false);
  std::vector<TxnId> granted;
  locks_.release_all(t.id, &granted);
  if (occ_critical_ == t.id) occ_critical_ = kNoTxn;
  t.write_set.clear();
  t.state = TxnState::Aborted;
  t.abort_reason = reason;
  if (!keep_pending) t.pending.reset();
  bump();
}

void Engine::release_claims(Txn& t, bool committing_writes) {
  // Drop t from every waiter list first; it can wait on at most one key.
  for (auto it = intents_.begin(); it != intents_.end();) {
    std::erase(it->second.waiters, t.id);
    if (it->second.holder == kNoTxn && it->second.waiters.empty()) {
      it = intents_.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<RowKey> held;
  for (const auto& [key, intent] : intents_) {
    if (intent.holder == t.id) held.push_back(key);
  }
  for (const auto& key : held) {
    if (committing_writes && t.write_set.count(key) != 0) {
      // First writer wins: the claim holder committed this key, so every
      // transaction queued behind it has lost.
      std::vector<TxnId> losers = intents_[key].waiters;
      intents_.erase(key);
      bump();
      for (TxnId w : losers) {
        Txn* wt = find_txn(w);
        if (wt != nullptr && wt->state == TxnState::Blocked) {
          abort_internal(*wt, Err::SerializationConflict, /*keep_pending=*/true);
        }
      }
    } else {
      release_intent(key);
    }
  }
}

void Engine::release_intent(const RowKey& key) {
  auto it = intents_.find(key);
  if (it == intents_.end()) return;
  if (it->second.waiters.empty()) {
    intents_.erase(it);
  } else {
    it->second.holder = it->second.waiters.front();
    it->second.waiters.erase(it->second.waiters.begin());
  }
  bump();
}

// --- operation entry / resumption ---

template <class T>
Engine::Txn* Engine::enter_op(TxnId id, OpKind kind, const RowKey& key, Result<T>* out) {
  Txn* t = find_txn(id);
  if (t == nullptr) {
    *out = Result<T>::fail(Err::InvalidState);
    return nullptr;
  }
  if (t->state == TxnState::Aborted) {
    // A parked operation whose transaction was aborted underneath it (deadlock
    // victim, first-writer loser) reports the abort reason on its next
    // attempt, exactly once.
    if (t->pending && t->pending->kind == kind && t->pending->key == key) {
      Err reason = t->abort_reason == Err::None ? Err::InvalidState : t->abort_reason;
      t->pending.reset();
      *out = Result<T>::fail(reason);
    } else {
      *out = Result<T>::fail(Err::InvalidState);
    }
    return nullptr;
  }
  if (t->state == TxnState::Committed) {
    *out = Result<T>::fail(Err::InvalidState);
    return nullptr;
  }
  if (t->state == TxnState::Blocked) {
    if (!t->pending || t->pending->kind != kind || t->pending->key != key) {
      *out = Result<T>::fail(Err::InvalidState);
      return nullptr;
    }
    return t;
  }
  t->pending.reset();
  return t;
}

// --- reads ---

Result<ReadOut> Engine::read(TxnId txn, const RowKey& key, const std::string& column) {
  Result<ReadOut> res;
  Txn* t = enter_op(txn, OpKind::Read, key, &res);
  if (t == nullptr) return res;

  const RowVersions* rv = store_.find(key);
  if (rv == nullptr) return Result<ReadOut>::fail(Err::RowNotFound);

  bool resuming = t->state == TxnState::Blocked;
  if (!t->occ && config_.mode == CcMode::Lscc) {
    if (resuming) {
      if (!locks_.holds_at_least(txn, key, LockMode::S) && !locks_.try_grant(txn, key)) {
        return Result<ReadOut>::block();
      }
    } else if (!locks_.holds_at_least(txn, key, LockMode::S)) {
      auto out = locks_.acquire(txn, key, LockMode::S);
      if (out == LockTable::AcquireOutcome::Queued) {
        PendingOp p;
        p.kind = OpKind::Read;
        p.key = key;
        p.column = column;
        t->pending = std::move(p);
        t->state = TxnState::Blocked;
        bump();
        return Result<ReadOut>::block();
      }
    }
  }

  if (resuming) {
    t->state = TxnState::Active;
    t->pending.reset();
  }

  // Pick the version this transaction reads.
  const Version* base = nullptr;
  std::uint64_t vseq = 0;
  if (!t->occ && config_.mode == CcMode::Mvcc && t->iso == Isolation::Snapshot) {
    for (std::size_t i = 0; i < rv->versions.size(); ++i) {
      if (rv->versions[i].commit_seq <= t->snapshot_seq) {
        base = &rv->versions[i];
        vseq = i;
      }
    }
    if (base == nullptr) return Result<ReadOut>::fail(Err::RowNotFound);
  } else {
    base = &rv->versions.back();
    vseq = rv->versions.size() - 1;
  }

  const std::map<std::string, std::int64_t>* cols = &base->columns;
  auto ws = t->write_set.find(key);
  if (ws != t->write_set.end()) cols = &ws->second;

  auto cit = cols->find(column);
  if (cit == cols->end()) {
    // Statement failed; under READ COMMITTED a fresh S lock still ends with
    // the statement.
    if (!t->occ && config_.mode == CcMode::Lscc && t->iso == Isolation::ReadCommitted &&
        locks_.granted_mode(txn, key) == LockMode::S) {
      std::vector<TxnId> granted;
      locks_.release_one(txn, key, &granted);
      bump();
    }
    return Result<ReadOut>::fail(Err::UnknownColumn);
  }

  ReadOut out;
  out.value = cit->second;
  out.stamp = visible_stamp(txn, key, *base);
  out.version_seq = vseq;
  record_observation(*t, key, out.stamp, vseq);

  if (!t->occ && config_.mode == CcMode::Lscc && t->iso == Isolation::ReadCommitted &&
      locks_.granted_mode(txn, key) == LockMode::S) {
    std::vector<TxnId> granted;
    locks_.release_one(txn, key, &granted);
  }
  bump();
  return Result<ReadOut>::okay(std::move(out));
}

// --- write gates ---

Engine::Gate Engine::lscc_write_gate(Txn& t, const RowKey& key) {
  if (locks_.holds_at_least(t.id, key, LockMode::X)) return {StepStatus::Ok, Err::None};

  bool resuming = t.state == TxnState::Blocked;

  if (!config_.update_lock_first) {
    if (resuming) {
      return locks_.try_grant(t.id, key) ? Gate{StepStatus::Ok, Err::None}
                                         : Gate{StepStatus::Blocked, Err::None};
    }
    auto out = locks_.acquire(t.id, key, LockMode::X);
    if (out == LockTable::AcquireOutcome::Queued) {
      t.pending.emplace();
      t.pending->key = key;
      t.state = TxnState::Blocked;
      bump();
      return {StepStatus::Blocked, Err::None};
    }
    return {StepStatus::Ok, Err::None};
  }

  // ROWVERSION-style protocol: reach U first, then convert to X in a
  // separate scheduler step. The intermediate block is deliberate; two
  // concurrent updaters meet U-vs-U and upgrade-vs-U here, which is the
  // deadlock this protocol is known for.
  if (resuming && t.pending->upgrade_enqueued) {
    return locks_.try_grant(t.id, key) ? Gate{StepStatus::Ok, Err::None}
                                       : Gate{StepStatus::Blocked, Err::None};
  }
  if (resuming) {
    // Waiting for the U lock.
    if (!locks_.holds_at_least(t.id, key, LockMode::U) && !locks_.try_grant(t.id, key)) {
      return {StepStatus::Blocked, Err::None};
    }
    locks_.enqueue_upgrade(t.id, key, LockMode::X);
    t.pending->upgrade_enqueued = true;
    bump();
    return {StepStatus::Blocked, Err::None};
  }
  if (!locks_.holds_at_least(t.id, key, LockMode::U)) {
    auto out = locks_.acquire(t.id, key, LockMode::U);
    if (out == LockTable::AcquireOutcome::Queued) {
      t.pending.emplace();
      t.pending->key = key;
      t.pending->upgrade_enqueued = false;
      t.state = TxnState::Blocked;
      bump();
      return {StepStatus::Blocked, Err::None};
    }
  }
  locks_.enqueue_upgrade(t.id, key, LockMode::X);
  t.pending.emplace();
  t.pending->key = key;
  t.pending->upgrade_enqueued = true;
  t.state = TxnState::Blocked;
  bump();
  return {StepStatus::Blocked, Err::None};
}

Engine::Gate Engine::mvcc_write_gate(Txn& t, const RowKey& key) {
  bool resuming = t.state == TxnState::Blocked;
  auto it = intents_.find(key);
  if (it != intents_.end() && it->second.holder != t.id) {
    if (!resuming) {
      it->second.waiters.push_back(t.id);
      t.pending.emplace();
      t.pending->key = key;
      t.state = TxnState::Blocked;
      bump();
    }
    return {StepStatus::Blocked, Err::None};
  }
  if (it == intents_.end()) {
    intents_[key] = Intent{t.id, {}};
    bump();
  }

  if (t.iso == Isolation::Snapshot) {
    // First committer wins: a row that moved past this snapshot can no
    // longer be written by this transaction.
    const RowVersions* rv = store_.find(key);
    if (rv != nullptr && rv->newest().commit_seq > t.snapshot_seq) {
      abort_internal(t, Err::SerializationConflict, /*keep_pending=*/false);
      return {StepStatus::Failed, Err::SerializationConflict};
    }
  }
  return {StepStatus::Ok, Err::None};
}

// --- writes ---

Result<WriteTicket> Engine::write(TxnId txn, const RowKey& key, const ColumnUpdates& updates) {
  Result<WriteTicket> res;
  Txn* t = enter_op(txn, OpKind::Write, key, &res);
  if (t == nullptr) return res;

  const RowVersions* rv = store_.find(key);
  if (rv == nullptr) return Result<WriteTicket>::fail(Err::RowNotFound);

  bool resuming = t->state == TxnState::Blocked;
  if (!t->occ) {
    Gate g = config_.mode == CcMode::Lscc ? lscc_write_gate(*t, key)
                                          : mvcc_write_gate(*t, key);
    if (g.status == StepStatus::Blocked) {
      if (!resuming && t->pending) {
        t->pending->kind = OpKind::Write;
        t->pending->updates = updates;
      }
      return Result<WriteTicket>::block();
    }
    if (g.status == StepStatus::Failed) return Result<WriteTicket>::fail(g.error);
  }
  if (t->state == TxnState::Blocked) {
    t->state = TxnState::Active;
    t->pending.reset();
  }

  bool unknown = false;
  auto merged = apply_updates(*t, key, updates, rv->newest(), &unknown);
  if (unknown) return Result<WriteTicket>::fail(Err::UnknownColumn);

  bool sensitive = !updates.empty() &&
                   std::all_of(updates.begin(), updates.end(), [](const ColumnUpdate& u) {
                     return u.kind == ColumnUpdate::Kind::Add;
                   });
  if (sensitive) {
    // A relative update depends on the value it lands on; with the claim or
    // X lock held that value is the newest committed version.
    record_observation(*t, key, visible_stamp(txn, key, rv->newest()),
                       rv->versions.size() - 1);
  }

  t->write_set[key] = merged;
  bump();
  return Result<WriteTicket>::okay(WriteTicket{key, std::move(merged)});
}

Result<CondOut> Engine::conditional_write(TxnId txn, const RowKey& key,
                                          const ColumnUpdates& updates,
                                          const VersionStamp& expected) {
  Result<CondOut> res;
  Txn* t = enter_op(txn, OpKind::CondWrite, key, &res);
  if (t == nullptr) return res;

  const RowVersions* rv = store_.find(key);
  if (rv == nullptr) return Result<CondOut>::fail(Err::RowNotFound);

  bool resuming = t->state == TxnState::Blocked;
  if (!t->occ) {
    Gate g = config_.mode == CcMode::Lscc ? lscc_write_gate(*t, key)
                                          : mvcc_write_gate(*t, key);
    if (g.status == StepStatus::Blocked) {
      if (!resuming && t->pending) {
        t->pending->kind = OpKind::CondWrite;
        t->pending->updates = updates;
        t->pending->expected = expected;
      }
      return Result<CondOut>::block();
    }
    if (g.status == StepStatus::Failed) return Result<CondOut>::fail(g.error);
  }
  if (t->state == TxnState::Blocked) {
    t->state = TxnState::Active;
    t->pending.reset();
  }

  VersionStamp current = visible_stamp(txn, key, rv->newest());
  if (!current.matches(expected)) {
    // Condition failed; nothing is buffered. An MVCC claim taken for this
    // statement alone is surrendered so waiters can proceed.
    if (!t->occ && config_.mode == CcMode::Mvcc && t->write_set.count(key) == 0) {
      auto it = intents_.find(key);
      if (it != intents_.end() && it->second.holder == txn) release_intent(key);
    }
    bump();
    return Result<CondOut>::okay(CondOut{0, current, {}});
  }

  bool unknown = false;
  auto merged = apply_updates(*t, key, updates, rv->newest(), &unknown);
  if (unknown) return Result<CondOut>::fail(Err::UnknownColumn);

  t->write_set[key] = merged;
  bump();
  return Result<CondOut>::okay(CondOut{1, current, std::move(merged)});
}

// --- OCC validation ---

VoidResult Engine::validate(TxnId txn) {
  VoidResult res;
  Txn* t = enter_op(txn, OpKind::Validate, RowKey{}, &res);
  if (t == nullptr) return res;
  if (!t->occ) return VoidResult::fail(Err::InvalidState);

  if (occ_critical_ != kNoTxn && occ_critical_ != txn) {
    if (t->state == TxnState::Active) {
      PendingOp p;
      p.kind = OpKind::Validate;
      t->pending = std::move(p);
      t->state = TxnState::Blocked;
      bump();
    }
    return VoidResult::block();
  }
  if (t->state == TxnState::Blocked) {
    t->state = TxnState::Active;
    t->pending.reset();
  }

  for (const auto& [key, obs] : t->read_set) {
    const RowVersions* rv = store_.find(key);
    bool still_current =
        rv != nullptr && visible_stamp(txn, key, rv->newest()).matches(obs.stamp);
    if (!still_current) {
      abort_internal(*t, Err::ValidationFailed, /*keep_pending=*/false);
      return VoidResult::fail(Err::ValidationFailed);
    }
  }
  occ_critical_ = txn;
  bump();
  return VoidResult::okay({});
}

// --- scheduler hooks ---

std::optional<TxnId> Engine::detect_deadlock() {
  auto graph = wait_graph();

  std::map<TxnId, int> color;  // 0 unseen, 1 on stack, 2 done
  std::vector<TxnId> path;
  std::vector<TxnId> cycle;

  auto dfs = [&](auto&& self, TxnId node) -> bool {
    color[node] = 1;
    path.push_back(node);
    auto it = graph.find(node);
    if (it != graph.end()) {
      for (TxnId next : it->second) {
        if (color[next] == 1) {
          auto start = std::find(path.begin(), path.end(), next);
          cycle.assign(start, path.end());
          return true;
        }
        if (color[next] == 0 && self(self, next)) return true;
      }
    }
    color[node] = 2;
    path.pop_back();
    return false;
  };

  for (const auto& [node, edges] : graph) {
    if (color[node] == 0 && dfs(dfs, node)) break;
  }
  if (cycle.empty()) return std::nullopt;

  TxnId victim = cycle.front();
  for (TxnId id : cycle) {
    if (start_seq(id) > start_seq(victim)) victim = id;
  }
  Txn* vt = find_txn(victim);
  abort_internal(*vt, Err::DeadlockVictim, /*keep_pending=*/true);
  return victim;
}

std::vector<TxnId> Engine::resolve_deadlocks() {
  std::vector<TxnId> victims;
  while (auto v = detect_deadlock()) victims.push_back(*v);
  return victims;
}

void Engine::tick() {
  ++ticks_;
  bump();
}

void Engine::inherit_read(TxnId txn, const RowKey& key, const VersionStamp& stamp,
                          std::uint64_t version_seq) {
  Txn* t = find_txn(txn);
  if (t == nullptr || t->state != TxnState::Active) return;
  record_observation(*t, key, stamp, version_seq);
  bump();
}

// --- helpers ---

VersionStamp Engine::visible_stamp(TxnId reader, const RowKey& key, const Version& v) const {
  if (v.stamp.kind == StampKind::CommitScn && other_claim_holder(reader, key)) {
    return VersionStamp::indeterminate(StampKind::CommitScn);
  }
  return v.stamp;
}

bool Engine::other_claim_holder(TxnId reader, const RowKey& key) const {
  auto xh = locks_.exclusive_holder(key);
  if (xh && *xh != reader) return true;
  auto it = intents_.find(key);
  return it != intents_.end() && it->second.holder != kNoTxn && it->second.holder != reader;
}

std::map<std::string, std::int64_t> Engine::apply_updates(const Txn& t, const RowKey& key,
                                                          const ColumnUpdates& updates,
                                                          const Version& base,
                                                          bool* unknown) const {
  auto ws = t.write_set.find(key);
  std::map<std::string, std::int64_t> cols =
      ws != t.write_set.end() ? ws->second : base.columns;
  for (const auto& u : updates) {
    auto c = cols.find(u.column);
    if (c == cols.end()) {
      *unknown = true;
      return {};
    }
    c->second = u.kind == ColumnUpdate::Kind::Set ? u.amount : c->second + u.amount;
  }
  return cols;
}

VersionStamp Engine::next_stamp(const RowKey& key, std::uint64_t new_commit_seq) const {
  const RowVersions* rv = store_.find(key);
  switch (config_.stamp) {
    case StampKind::Counter: {
      std::uint64_t prev = 0;
      if (rv != nullptr && rv->newest().stamp.value) prev = *rv->newest().stamp.value;
      return {StampKind::Counter, prev + 1};
    }
    case StampKind::CoarseTs:
      return {StampKind::CoarseTs, ticks_ / config_.clock_resolution_ticks};
    case StampKind::CommitScn:
      return {StampKind::CommitScn, new_commit_seq};
  }
  return {config_.stamp, 0};
}

void Engine::record_observation(Txn& t, const RowKey& key, const VersionStamp& stamp,
                                std::uint64_t version_seq) {
  t.read_set[key] = ReadObservation{stamp, version_seq};
}

// --- inspection ---

TxnState Engine::txn_state(TxnId txn) const { return txns_.at(txn).state; }

Err Engine::txn_abort_reason(TxnId txn) const { return txns_.at(txn).abort_reason; }

Isolation Engine::txn_isolation(TxnId txn) const { return txns_.at(txn).iso; }

bool Engine::txn_is_occ(TxnId txn) const { return txns_.at(txn).occ; }

std::uint64_t Engine::start_seq(TxnId txn) const { return txns_.at(txn).start_seq; }

std::optional<std::uint64_t> Engine::snapshot_seq(TxnId txn) const {
  const Txn& t = txns_.at(txn);
  if (config_.mode != CcMode::Mvcc || t.occ) return std::nullopt;
  return t.snapshot_seq;
}

const std::map<RowKey, ReadObservation>& Engine::observations(TxnId txn) const {
  return txns_.at(txn).read_set;
}

std::optional<std::int64_t> Engine::peek(const RowKey& key, const std::string& column) const {
  const RowVersions* rv = store_.find(key);
  if (rv == nullptr) return std::nullopt;
  auto it = rv->newest().columns.find(column);
  if (it == rv->newest().columns.end()) return std::nullopt;
  return it->second;
}

std::optional<VersionStamp> Engine::committed_stamp(const RowKey& key) const {
  const RowVersions* rv = store_.find(key);
  if (rv == nullptr) return std::nullopt;
  return rv->newest().stamp;
}

std::vector<TxnId> Engine::blocked_txns() const {
  std::vector<TxnId> out;
  for (const auto& [id, t] : txns_) {
    if (t.state == TxnState::Blocked) out.push_back(id);
  }
  return out;
}

std::map<TxnId, std::set<TxnId>> Engine::wait_graph() const {
  auto graph = locks_.wait_edges();
  for (const auto& [key, intent] : intents_) {
    for (TxnId w : intent.waiters) {
      if (intent.holder != kNoTxn) graph[w].insert(intent.holder);
    }
  }
  if (occ_critical_ != kNoTxn) {
    for (const auto& [id, t] : txns_) {
      if (t.state == TxnState::Blocked && t.pending &&
          t.pending->kind == OpKind::Validate && id != occ_critical_) {
        graph[id].insert(occ_critical_);
      }
    }
  }
  return graph;
}

void Engine::check_invariants() const {
  std::string why;
  if (!locks_.check(&why)) throw std::logic_error("lock table: " + why);

  for (const auto& [id, t] : txns_) {
    if (t.state == TxnState::Blocked && !t.pending) {
      throw std::logic_error("blocked txn without a parked operation");
    }
    if (t.state == TxnState::Committed || t.state == TxnState::Aborted) {
      if (locks_.granted_count(id) != 0 || locks_.queued_request_count(id) != 0) {
        throw std::logic_error("terminal txn still holds or waits for locks");
      }
    }
    if (locks_.queued_request_count(id) > 1) {
      throw std::logic_error("txn queued on more than one key");
    }
    if (locks_.queued_request_count(id) == 1 && t.state != TxnState::Blocked) {
      throw std::logic_error("queued txn not in BLOCKED state");
    }
  }

  for (const auto& [key, intent] : intents_) {
    if (intent.holder != kNoTxn) {
      const Txn* h = find_txn(intent.holder);
      if (h == nullptr || h->state == TxnState::Committed || h->state == TxnState::Aborted) {
        throw std::logic_error("intent held by terminal txn on " + key.to_string());
      }
    }
    std::set<TxnId> seen;
    for (TxnId w : intent.waiters) {
      if (!seen.insert(w).second) throw std::logic_error("duplicate intent waiter");
      const Txn* wt = find_txn(w);
      if (wt == nullptr || wt->state != TxnState::Blocked) {
        throw std::logic_error("intent waiter not BLOCKED on " + key.to_string());
      }
    }
  }

  for (const auto& [key, rv] : store_.rows()) {
    if (rv.versions.empty()) throw std::logic_error("row with no versions");
    for (std::size_t i = 1; i < rv.versions.size(); ++i) {
      const Version& a = rv.versions[i - 1];
      const Version& b = rv.versions[i];
      if (b.commit_seq <= a.commit_seq) {
        throw std::logic_error("non-increasing commit_seq on " + key.to_string());
      }
      if (!a.stamp.value || !b.stamp.value) {
        throw std::logic_error("stored stamp must be determinate");
      }
      bool ok = true;
      switch (b.stamp.kind) {
        case StampKind::Counter:
          ok = *b.stamp.value == *a.stamp.value + 1;
          break;
        case StampKind::CommitScn:
          ok = *b.stamp.value > *a.stamp.value;
          break;
        case StampKind::CoarseTs:
          ok = *b.stamp.value >= *a.stamp.value;
          break;
      }
      if (!ok) throw std::logic_error("stamp sequence violation on " + key.to_string());
    }
  }
}

}  // namespace rvv
