#include "doctest.h"

#include "rvv/engine/engine.hpp"

using namespace rvv;

namespace {

const RowKey kAcc{"accounts", "acc"};
const RowKey kAux{"accounts", "aux"};

Store two_rows(StampKind kind) {
  Store s;
  s.insert_row(kAcc, {{"balance", 1000}}, {kind, 0});
  s.insert_row(kAux, {{"balance", 50}}, {kind, 0});
  return s;
}

Engine mvcc_engine(StampKind kind = StampKind::Counter) {
  return Engine({CcMode::Mvcc, kind}, two_rows(kind));
}

ColumnUpdates set_balance(std::int64_t v) { return {ColumnUpdate::set("balance", v)}; }

}  // namespace

TEST_CASE("begin validates isolation against the multiversion mode") {
  Engine e = mvcc_engine();
  CHECK(e.begin(Isolation::RepeatableRead, CcMode::Mvcc).error ==
        Err::InvalidIsolationForMode);
  CHECK(e.begin(Isolation::Serializable, CcMode::Mvcc).failed());
  CHECK(e.begin(Isolation::ReadCommitted, CcMode::Lscc).failed());

  auto snap = e.begin(Isolation::Snapshot, CcMode::Mvcc);
  REQUIRE(snap.ok());
  CHECK(e.snapshot_seq(*snap) == 0);
  CHECK(e.begin(Isolation::ReadCommitted, CcMode::Mvcc).ok());
}

TEST_CASE("reads never wait on a write claim") {
  Engine e = mvcc_engine();
  auto a = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto b = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  REQUIRE(e.write(*a, kAcc, set_balance(900)).ok());

  auto r = e.read(*b, kAcc, "balance");
  REQUIRE(r.ok());
  CHECK(r->value == 1000);  // a's write is still buffered
  CHECK(r->stamp == VersionStamp{StampKind::Counter, 0});
  CHECK(e.txn_state(*b) == TxnState::Active);
}

TEST_CASE("first writer wins when the claim holder commits") {
  Engine e = mvcc_engine();
  auto a = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto b = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);

  REQUIRE(e.write(*a, kAcc, set_balance(900)).ok());
  CHECK(e.write(*b, kAcc, set_balance(800)).blocked());
  CHECK(e.txn_state(*b) == TxnState::Blocked);
  CHECK(e.wait_graph().at(*b).count(*a) == 1);

  REQUIRE(e.commit(*a).ok());
  CHECK(e.txn_state(*b) == TxnState::Aborted);
  CHECK(e.txn_abort_reason(*b) == Err::SerializationConflict);

  // the parked write reports the loss once, then the txn is just dead
  CHECK(e.write(*b, kAcc, set_balance(800)).error == Err::SerializationConflict);
  CHECK(e.write(*b, kAcc, set_balance(800)).error == Err::InvalidState);
  CHECK(e.peek(kAcc, "balance") == 900);
  e.check_invariants();
}

TEST_CASE("a waiter inherits the claim when the holder aborts") {
  Engine e = mvcc_engine();
  auto a = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto b = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);

  REQUIRE(e.write(*a, kAcc, set_balance(900)).ok());
  CHECK(e.write(*b, kAcc, set_balance(800)).blocked());
  REQUIRE(e.abort(*a).ok());

  auto w = e.write(*b, kAcc, set_balance(800));
  REQUIRE(w.ok());
  CHECK(e.txn_state(*b) == TxnState::Active);
  REQUIRE(e.commit(*b).ok());
  CHECK(e.peek(kAcc, "balance") == 800);
}

TEST_CASE("claim waiters are served in arrival order and lose together") {
  Engine e = mvcc_engine();
  auto a = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto b = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto c = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);

  REQUIRE(e.write(*a, kAcc, set_balance(900)).ok());
  CHECK(e.write(*b, kAcc, set_balance(800)).blocked());
  CHECK(e.write(*c, kAcc, set_balance(700)).blocked());

  REQUIRE(e.abort(*a).ok());
  REQUIRE(e.write(*b, kAcc, set_balance(800)).ok());  // b was first in line
  CHECK(e.txn_state(*c) == TxnState::Blocked);

  REQUIRE(e.commit(*b).ok());
  CHECK(e.txn_state(*c) == TxnState::Aborted);
  CHECK(e.write(*c, kAcc, set_balance(700)).error == Err::SerializationConflict);
  CHECK(e.peek(kAcc, "balance") == 800);
  e.check_invariants();
}

TEST_CASE("snapshot transactions read as of begin") {
  Engine e = mvcc_engine();
  auto snap = e.begin(Isolation::Snapshot, CcMode::Mvcc);
  REQUIRE(snap.ok());

  auto w = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  REQUIRE(e.write(*w, kAcc, set_balance(800)).ok());
  REQUIRE(e.commit(*w).ok());

  auto r = e.read(*snap, kAcc, "balance");
  REQUIRE(r.ok());
  CHECK(r->value == 1000);
  CHECK(r->version_seq == 0);

  // a later reader outside the snapshot sees the new version
  auto rc = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  CHECK(e.read(*rc, kAcc, "balance")->value == 800);

  // and the snapshot keeps giving the same answer
  CHECK(e.read(*snap, kAcc, "balance")->value == 1000);
}

TEST_CASE("snapshot transactions see their own writes") {
  Engine e = mvcc_engine();
  auto t = e.begin(Isolation::Snapshot, CcMode::Mvcc);
  REQUIRE(e.write(*t, kAcc, set_balance(1)).ok());
  CHECK(e.read(*t, kAcc, "balance")->value == 1);
  CHECK(e.peek(kAcc, "balance") == 1000);
}

TEST_CASE("first committer wins against a snapshot writer") {
  Engine e = mvcc_engine();
  auto snap = e.begin(Isolation::Snapshot, CcMode::Mvcc);

  auto w = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  REQUIRE(e.write(*w, kAcc, set_balance(800)).ok());
  REQUIRE(e.commit(*w).ok());

  auto res = e.write(*snap, kAcc, set_balance(900));
  CHECK(res.failed());
  CHECK(res.error == Err::SerializationConflict);
  CHECK(e.txn_state(*snap) == TxnState::Aborted);
  e.check_invariants();

  // a row untouched since the snapshot is still writable
  auto snap2 = e.begin(Isolation::Snapshot, CcMode::Mvcc);
  REQUIRE(e.write(*snap2, kAux, set_balance(60)).ok());
  REQUIRE(e.commit(*snap2).ok());
  CHECK(e.peek(kAux, "balance") == 60);
}

TEST_CASE("a failed condition surrenders a claim taken for that statement") {
  Engine e = mvcc_engine();
  auto a = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto b = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);

  auto miss = e.conditional_write(*a, kAcc, set_balance(900),
                                  VersionStamp{StampKind::Counter, 7});
  REQUIRE(miss.ok());
  CHECK(miss->rows_affected == 0);
  CHECK(miss->current_stamp == VersionStamp{StampKind::Counter, 0});

  // b is not stuck behind a claim that buffered nothing
  CHECK(e.write(*b, kAcc, set_balance(800)).ok());
  REQUIRE(e.commit(*b).ok());
  REQUIRE(e.commit(*a).ok());
  CHECK(e.peek(kAcc, "balance") == 800);
}

TEST_CASE("a matched condition keeps the claim until commit") {
  Engine e = mvcc_engine();
  auto a = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto b = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);

  auto hit = e.conditional_write(*a, kAcc, set_balance(700),
                                 VersionStamp{StampKind::Counter, 0});
  REQUIRE(hit.ok());
  CHECK(hit->rows_affected == 1);

  CHECK(e.write(*b, kAcc, set_balance(800)).blocked());
  REQUIRE(e.commit(*a).ok());
  CHECK(e.txn_state(*b) == TxnState::Aborted);
  CHECK(e.peek(kAcc, "balance") == 700);
}

TEST_CASE("commit-scn claims hide the stamp from other readers") {
  Engine e = mvcc_engine(StampKind::CommitScn);
  auto a = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  auto b = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);

  REQUIRE(e.write(*a, kAcc, set_balance(900)).ok());

  auto rb = e.read(*b, kAcc, "balance");
  REQUIRE(rb.ok());
  CHECK(rb->value == 1000);
  CHECK(rb->stamp.is_indeterminate());

  auto ra = e.read(*a, kAcc, "balance");
  REQUIRE(ra.ok());
  CHECK(ra->stamp == VersionStamp{StampKind::CommitScn, 0});

  REQUIRE(e.commit(*a).ok());
  auto rb2 = e.read(*b, kAcc, "balance");
  REQUIRE(rb2.ok());
  CHECK(rb2->stamp == VersionStamp{StampKind::CommitScn, 1});
  CHECK(rb2->value == 900);
}

TEST_CASE("optimistic validation is exclusive until the validator ends") {
  Engine e = mvcc_engine();
  auto a = e.begin_occ();
  auto b = e.begin_occ();
  REQUIRE(a.ok());
  CHECK(e.txn_is_occ(*a));
  CHECK_FALSE(e.snapshot_seq(*a).has_value());

  REQUIRE(e.read(*a, kAcc, "balance").ok());
  REQUIRE(e.read(*b, kAcc, "balance").ok());

  REQUIRE(e.validate(*a).ok());
  CHECK(e.validate(*b).blocked());
  CHECK(e.txn_state(*b) == TxnState::Blocked);
  CHECK(e.wait_graph().at(*b).count(*a) == 1);

  REQUIRE(e.write(*a, kAcc, set_balance(900)).ok());
  REQUIRE(e.commit(*a).ok());

  auto v = e.validate(*b);
  CHECK(v.failed());
  CHECK(v.error == Err::ValidationFailed);
  CHECK(e.txn_state(*b) == TxnState::Aborted);
  CHECK(e.peek(kAcc, "balance") == 900);
  e.check_invariants();
}

TEST_CASE("an undisturbed optimistic transaction validates and commits") {
  Engine e = mvcc_engine();
  auto t = e.begin_occ();
  auto r = e.read(*t, kAcc, "balance");
  REQUIRE(r.ok());
  REQUIRE(e.validate(*t).ok());
  REQUIRE(e.write(*t, kAcc, set_balance(r->value - 100)).ok());
  REQUIRE(e.commit(*t).ok());
  CHECK(e.peek(kAcc, "balance") == 900);
  CHECK(e.committed_stamp(kAcc) == VersionStamp{StampKind::Counter, 1});
}

TEST_CASE("validate is rejected outside optimistic transactions") {
  Engine e = mvcc_engine();
  auto t = e.begin(Isolation::ReadCommitted, CcMode::Mvcc);
  CHECK(e.validate(*t).error == Err::InvalidState);
}
