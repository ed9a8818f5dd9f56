#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rvv/engine/types.hpp"

namespace rvv {

enum class LockMode : std::uint8_t { S, U, X };

const char* to_string(LockMode m);

/// S-S and S-U are the only compatible pairs.
bool lock_compatible(LockMode a, LockMode b);

/// S < U < X.
int lock_strength(LockMode m);

/// Per-key granted set plus FIFO wait queue.
///
/// Grant discipline: a request is grantable when it conflicts with no granted
/// lock of another transaction and with no queued request it must respect.
/// Fresh requests respect every queued request ahead of them (no overtaking);
/// upgrade requests are queued at the front but must respect every queued
/// request of another transaction, wherever it sits. That is what turns the
/// select-then-update interleaving into a detectable cycle instead of letting
/// the upgrade slip past a waiting writer.
class LockTable {
 public:
  struct Request {
    TxnId txn = kNoTxn;
    LockMode mode = LockMode::S;
    bool upgrade = false;
  };

  enum class AcquireOutcome { AlreadyHeld, Granted, Queued };

  /// Acquires or upgrades. Queued requests are remembered; a later
  /// try_grant() or a release re-evaluation completes them.
  AcquireOutcome acquire(TxnId txn, const RowKey& key, LockMode mode);

  /// Enqueues an upgrade without attempting an immediate grant. Used by the
  /// two-step update protocol that converts U to X in a later call.
  void enqueue_upgrade(TxnId txn, const RowKey& key, LockMode mode);

  /// Attempts to grant txn's queued request on key. Returns true when the
  /// lock is held after the call.
  bool try_grant(TxnId txn, const RowKey& key);

  std::optional<LockMode> granted_mode(TxnId txn, const RowKey& key) const;
  bool holds_at_least(TxnId txn, const RowKey& key, LockMode mode) const;
  std::optional<TxnId> exclusive_holder(const RowKey& key) const;
  bool has_queued_request(TxnId txn) const;
  std::size_t queued_request_count(TxnId txn) const;
  std::size_t granted_count(TxnId txn) const;

  /// Releases everything txn holds or waits for. Newly granted transactions
  /// (by the re-evaluation) are appended to granted_out.
  void release_all(TxnId txn, std::vector<TxnId>* granted_out);

  /// Releases one granted lock (statement-end S release under READ
  /// COMMITTED).
  void release_one(TxnId txn, const RowKey& key, std::vector<TxnId>* granted_out);

  /// txn -> set of txns it waits on, derived from queue and grant state.
  std::map<TxnId, std::set<TxnId>> wait_edges() const;

  /// Verifies compatibility of all granted sets and queue sanity. Returns
  /// false and fills why on the first violation.
  bool check(std::string* why) const;

  bool empty() const;

 private:
  struct Entry {
    std::vector<std::pair<TxnId, LockMode>> granted;
    std::vector<Request> queue;
  };

  Entry* find_entry(const RowKey& key);
  const Entry* find_entry(const RowKey& key) const;
  bool grantable(const Entry& e, const Request& r, std::size_t queue_pos) const;
  void grant(Entry& e, std::size_t queue_pos);
  void reevaluate(const RowKey& key, std::vector<TxnId>* granted_out);
  void erase_if_idle(const RowKey& key);

  std::map<RowKey, Entry> entries_;
};

}  // namespace rvv
