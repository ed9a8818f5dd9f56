#include "doctest.h"

#include "rvv/engine/lock_table.hpp"

using namespace rvv;

namespace {
const RowKey kX{"items", "x"};
const RowKey kY{"items", "y"};
}  // namespace

TEST_CASE("compatibility: only S-S and S-U coexist") {
  CHECK(lock_compatible(LockMode::S, LockMode::S));
  CHECK(lock_compatible(LockMode::S, LockMode::U));
  CHECK(lock_compatible(LockMode::U, LockMode::S));
  CHECK_FALSE(lock_compatible(LockMode::U, LockMode::U));
  CHECK_FALSE(lock_compatible(LockMode::U, LockMode::X));
  CHECK_FALSE(lock_compatible(LockMode::X, LockMode::U));
  CHECK_FALSE(lock_compatible(LockMode::S, LockMode::X));
  CHECK_FALSE(lock_compatible(LockMode::X, LockMode::S));
  CHECK_FALSE(lock_compatible(LockMode::X, LockMode::X));

  CHECK(lock_strength(LockMode::S) < lock_strength(LockMode::U));
  CHECK(lock_strength(LockMode::U) < lock_strength(LockMode::X));
}

TEST_CASE("shared readers coexist, writers queue") {
  LockTable lt;
  CHECK(lt.acquire(1, kX, LockMode::S) == LockTable::AcquireOutcome::Granted);
  CHECK(lt.acquire(2, kX, LockMode::S) == LockTable::AcquireOutcome::Granted);
  CHECK(lt.acquire(3, kX, LockMode::U) == LockTable::AcquireOutcome::Granted);

  CHECK(lt.acquire(4, kX, LockMode::X) == LockTable::AcquireOutcome::Queued);
  CHECK(lt.has_queued_request(4));
  CHECK_FALSE(lt.granted_mode(4, kX).has_value());

  // re-request while queued stays queued
  CHECK(lt.acquire(4, kX, LockMode::X) == LockTable::AcquireOutcome::Queued);

  std::vector<TxnId> granted;
  lt.release_all(1, &granted);
  lt.release_all(2, &granted);
  CHECK(granted.empty());
  lt.release_all(3, &granted);
  CHECK(granted == std::vector<TxnId>{4});
  CHECK(lt.granted_mode(4, kX) == LockMode::X);
  CHECK(lt.exclusive_holder(kX) == TxnId{4});
}

TEST_CASE("holding a stronger lock satisfies weaker requests") {
  LockTable lt;
  lt.acquire(1, kX, LockMode::X);
  CHECK(lt.acquire(1, kX, LockMode::S) == LockTable::AcquireOutcome::AlreadyHeld);
  CHECK(lt.acquire(1, kX, LockMode::U) == LockTable::AcquireOutcome::AlreadyHeld);
  CHECK(lt.holds_at_least(1, kX, LockMode::S));
  CHECK(lt.holds_at_least(1, kX, LockMode::X));

  lt.acquire(2, kY, LockMode::S);
  CHECK_FALSE(lt.holds_at_least(2, kY, LockMode::U));
}

TEST_CASE("uncontended upgrade converts in place") {
  LockTable lt;
  lt.acquire(1, kX, LockMode::S);
  CHECK(lt.acquire(1, kX, LockMode::X) == LockTable::AcquireOutcome::Granted);
  CHECK(lt.granted_mode(1, kX) == LockMode::X);
  CHECK(lt.granted_count(1) == 1);
}

TEST_CASE("fresh requests never overtake the queue") {
  LockTable lt;
  lt.acquire(1, kX, LockMode::S);
  CHECK(lt.acquire(2, kX, LockMode::X) == LockTable::AcquireOutcome::Queued);
  // txn 3's S is compatible with the granted S, but 2's X waits ahead of it
  CHECK(lt.acquire(3, kX, LockMode::S) == LockTable::AcquireOutcome::Queued);

  std::vector<TxnId> granted;
  lt.release_all(1, &granted);
  CHECK(granted == std::vector<TxnId>{2});
  CHECK(lt.granted_mode(2, kX) == LockMode::X);
  CHECK(lt.has_queued_request(3));

  lt.release_all(2, &granted);
  CHECK(lt.granted_mode(3, kX) == LockMode::S);
}

TEST_CASE("upgrade requests respect other queued writers") {
  // txn 1 holds S; txn 2 queues X; txn 1 now wants X. The upgrade goes to
  // the front of the queue but may not be granted over 2's waiting request,
  // so both wait on each other: the classic select-then-update cycle.
  LockTable lt;
  lt.acquire(1, kX, LockMode::S);
  CHECK(lt.acquire(2, kX, LockMode::X) == LockTable::AcquireOutcome::Queued);
  CHECK(lt.acquire(1, kX, LockMode::X) == LockTable::AcquireOutcome::Queued);

  auto edges = lt.wait_edges();
  CHECK(edges[1].count(2) == 1);
  CHECK(edges[2].count(1) == 1);

  // dropping txn 2 lets the upgrade through
  std::vector<TxnId> granted;
  lt.release_all(2, &granted);
  CHECK(granted == std::vector<TxnId>{1});
  CHECK(lt.granted_mode(1, kX) == LockMode::X);
}

TEST_CASE("enqueue_upgrade parks the conversion for a later try_grant") {
  LockTable lt;
  lt.acquire(1, kX, LockMode::U);
  lt.enqueue_upgrade(1, kX, LockMode::X);
  CHECK(lt.queued_request_count(1) == 1);
  // idempotent: a second enqueue is a no-op
  lt.enqueue_upgrade(1, kX, LockMode::X);
  CHECK(lt.queued_request_count(1) == 1);

  CHECK(lt.try_grant(1, kX));
  CHECK(lt.granted_mode(1, kX) == LockMode::X);
  CHECK(lt.queued_request_count(1) == 0);

  // with a reader present the conversion has to wait
  LockTable lt2;
  lt2.acquire(1, kX, LockMode::U);
  lt2.acquire(2, kX, LockMode::S);
  lt2.enqueue_upgrade(1, kX, LockMode::X);
  CHECK_FALSE(lt2.try_grant(1, kX));
  std::vector<TxnId> granted;
  lt2.release_all(2, &granted);
  CHECK(granted == std::vector<TxnId>{1});
}

TEST_CASE("statement-end release regrants waiters") {
  LockTable lt;
  lt.acquire(1, kX, LockMode::S);
  lt.acquire(2, kX, LockMode::X);

  std::vector<TxnId> granted;
  lt.release_one(1, kX, &granted);
  CHECK(granted == std::vector<TxnId>{2});
  CHECK(lt.exclusive_holder(kX) == TxnId{2});
  CHECK_FALSE(lt.granted_mode(1, kX).has_value());
}

TEST_CASE("wait edges point from waiter to incompatible holder") {
  LockTable lt;
  lt.acquire(1, kX, LockMode::X);
  lt.acquire(2, kX, LockMode::S);
  lt.acquire(3, kY, LockMode::S);

  auto edges = lt.wait_edges();
  CHECK(edges[2] == std::set<TxnId>{1});
  CHECK(edges.count(3) == 0);
}

TEST_CASE("internal consistency check accepts reachable states") {
  LockTable lt;
  std::string why;
  CHECK(lt.check(&why));
  CHECK(lt.empty());

  lt.acquire(1, kX, LockMode::S);
  lt.acquire(2, kX, LockMode::U);
  lt.acquire(3, kX, LockMode::X);
  lt.acquire(4, kY, LockMode::X);
  CHECK(lt.check(&why));
  CHECK_FALSE(lt.empty());

  std::vector<TxnId> granted;
  lt.release_all(1, &granted);
  lt.release_all(2, &granted);
  lt.release_all(3, &granted);
  lt.release_all(4, &granted);
  CHECK(lt.empty());
}
