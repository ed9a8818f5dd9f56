#include "rvv/engine/lock_table.hpp"

#include <algorithm>

namespace rvv {

const char* to_string(LockMode m) {
  switch (m) {
    case LockMode::S: return "S";
    case LockMode::U: return "U";
    case LockMode::X: return "X";
  }
  return "?";
}

bool lock_compatible(LockMode a, LockMode b) {
  if (a == LockMode::S && b == LockMode::S) return true;
  if (a == LockMode::S && b == LockMode::U) return true;
  if (a == LockMode::U && b == LockMode::S) return true;
  return false;
}

int lock_strength(LockMode m) {
  switch (m) {
    case LockMode::S: return 0;
    case LockMode::U: return 1;
    case LockMode::X: return 2;
  }
  return -1;
}

LockTable::Entry* LockTable::find_entry(const RowKey& key) {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const LockTable::Entry* LockTable::find_entry(const RowKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

bool LockTable::grantable(const Entry& e, const Request& r, std::size_t queue_pos) const {
  for (const auto& [txn, mode] : e.granted) {
    if (txn != r.txn && !lock_compatible(r.mode, mode)) return false;
  }
  for (std::size_t i = 0; i < e.queue.size(); ++i) {
    const Request& q = e.queue[i];
    if (q.txn == r.txn) continue;
    if (!r.upgrade && i >= queue_pos) continue;  // fresh requests respect only the queue ahead
    if (!lock_compatible(r.mode, q.mode)) return false;
  }
  return true;
}

void LockTable::grant(Entry& e, std::size_t queue_pos) {
  Request r = e.queue[queue_pos];
  e.queue.erase(e.queue.begin() + static_cast<std::ptrdiff_t>(queue_pos));
  for (auto& [txn, mode] : e.granted) {
    if (txn == r.txn) {
      mode = r.mode;
      return;
    }
  }
  e.granted.emplace_back(r.txn, r.mode);
}

LockTable::AcquireOutcome LockTable::acquire(TxnId txn, const RowKey& key, LockMode mode) {
  auto held = granted_mode(txn, key);
  if (held && lock_strength(*held) >= lock_strength(mode)) return AcquireOutcome::AlreadyHeld;

  Entry& e = entries_[key];
  for (std::size_t i = 0; i < e.queue.size(); ++i) {
    if (e.queue[i].txn == txn) {
      return try_grant(txn, key) ? AcquireOutcome::Granted : AcquireOutcome::Queued;
    }
  }

  Request r{txn, mode, held.has_value()};
  if (grantable(e, r, e.queue.size())) {
    if (held) {
      for (auto& [t, m] : e.granted) {
        if (t == txn) m = mode;
      }
    } else {
      e.granted.emplace_back(txn, mode);
    }
    return AcquireOutcome::Granted;
  }

  if (r.upgrade) {
    // Upgrades queue ahead of plain requests, behind upgrades already waiting.
    auto pos = e.queue.begin();
    while (pos != e.queue.end() && pos->upgrade) ++pos;
    e.queue.insert(pos, r);
  } else {
    e.queue.push_back(r);
  }
  return AcquireOutcome::Queued;
}

void LockTable::enqueue_upgrade(TxnId txn, const RowKey& key, LockMode mode) {
  Entry& e = entries_[key];
  for (const auto& q : e.queue) {
    if (q.txn == txn) return;
  }
  Request r{txn, mode, true};
  auto pos = e.queue.begin();
  while (pos != e.queue.end() && pos->upgrade) ++pos;
  e.queue.insert(pos, r);
}

bool LockTable::try_grant(TxnId txn, const RowKey& key) {
  Entry* e = find_entry(key);
  if (e == nullptr) return false;
  for (std::size_t i = 0; i < e->queue.size(); ++i) {
    if (e->queue[i].txn != txn) continue;
    if (!grantable(*e, e->queue[i], i)) return false;
    grant(*e, i);
    return true;
  }
  return false;
}

std::optional<LockMode> LockTable::granted_mode(TxnId txn, const RowKey& key) const {
  const Entry* e = find_entry(key);
  if (e == nullptr) return std::nullopt;
  for (const auto& [t, m] : e->granted) {
    if (t == txn) return m;
  }
  return std::nullopt;
}

bool LockTable::holds_at_least(TxnId txn, const RowKey& key, LockMode mode) const {
  auto held = granted_mode(txn, key);
  return held && lock_strength(*held) >= lock_strength(mode);
}

std::optional<TxnId> LockTable::exclusive_holder(const RowKey& key) const {
  const Entry* e = find_entry(key);
  if (e == nullptr) return std::nullopt;
  for (const auto& [t, m] : e->granted) {
    if (m == LockMode::X) return t;
  }
  return std::nullopt;
}

bool LockTable::has_queued_request(TxnId txn) const {
  return queued_request_count(txn) > 0;
}

std::size_t LockTable::queued_request_count(TxnId txn) const {
  std::size_t n = 0;
  for (const auto& [key, e] : entries_) {
    for (const auto& q : e.queue) {
      if (q.txn == txn) ++n;
    }
  }
  return n;
}

std::size_t LockTable::granted_count(TxnId txn) const {
  std::size_t n = 0;
  for (const auto& [key, e] : entries_) {
    for (const auto& [t, m] : e.granted) {
      if (t == txn) ++n;
    }
  }
  return n;
}

void LockTable::reevaluate(const RowKey& key, std::vector<TxnId>* granted_out) {
  Entry* e = find_entry(key);
  if (e == nullptr) return;
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (std::size_t i = 0; i < e->queue.size(); ++i) {
      if (grantable(*e, e->queue[i], i)) {
        TxnId txn = e->queue[i].txn;
        grant(*e, i);
        if (granted_out != nullptr) granted_out->push_back(txn);
        progressed = true;
        break;
      }
    }
  }
  erase_if_idle(key);
}

void LockTable::erase_if_idle(const RowKey& key) {
  auto it = entries_.find(key);
  if (it != entries_.end() && it->second.granted.empty() && it->second.queue.empty()) {
    entries_.erase(it);
  }
}

void LockTable::release_all(TxnId txn, std::vector<TxnId>* granted_out) {
  std::vector<RowKey> touched;
  for (auto& [key, e] : entries_) {
    auto before = e.granted.size() + e.queue.size();
    std::erase_if(e.granted, [&](const auto& g) { return g.first == txn; });
    std::erase_if(e.queue, [&](const Request& q) { return q.txn == txn; });
    if (before != e.granted.size() + e.queue.size()) touched.push_back(key);
  }
  for (const auto& key : touched) reevaluate(key, granted_out);
}

void LockTable::release_one(TxnId txn, const RowKey& key, std::vector<TxnId>* granted_out) {
  Entry* e = find_entry(key);
  if (e == nullptr) return;
  std::erase_if(e->granted, [&](const auto& g) { return g.first == txn; });
  reevaluate(key, granted_out);
}

std::map<TxnId, std::set<TxnId>> LockTable::wait_edges() const {
  std::map<TxnId, std::set<TxnId>> out;
  for (const auto& [key, e] : entries_) {
    for (std::size_t i = 0; i < e.queue.size(); ++i) {
      const Request& r = e.queue[i];
      auto& edges = out[r.txn];
      for (const auto& [txn, mode] : e.granted) {
        if (txn != r.txn && !lock_compatible(r.mode, mode)) edges.insert(txn);
      }
      for (std::size_t j = 0; j < e.queue.size(); ++j) {
        const Request& q = e.queue[j];
        if (q.txn == r.txn) continue;
        if (!r.upgrade && j >= i) continue;
        if (!lock_compatible(r.mode, q.mode)) edges.insert(q.txn);
      }
    }
  }
  return out;
}

bool LockTable::check(std::string* why) const {
  for (const auto& [key, e] : entries_) {
    int u_holders = 0;
    int x_holders = 0;
    for (std::size_t i = 0; i < e.granted.size(); ++i) {
      const auto& [ti, mi] = e.granted[i];
      if (mi == LockMode::U) ++u_holders;
      if (mi == LockMode::X) ++x_holders;
      for (std::size_t j = i + 1; j < e.granted.size(); ++j) {
        const auto& [tj, mj] = e.granted[j];
        if (ti == tj) {
          if (why) *why = "duplicate granted entry for txn on " + key.to_string();
          return false;
        }
        if (!lock_compatible(mi, mj)) {
          if (why) {
            *why = std::string("incompatible granted locks ") + to_string(mi) + "/" +
                   to_string(mj) + " on " + key.to_string();
          }
          return false;
        }
      }
    }
    if (u_holders > 1 || x_holders > 1) {
      if (why) *why = "multiple U or X holders on " + key.to_string();
      return false;
    }
    std::set<TxnId> queued;
    for (const auto& q : e.queue) {
      if (!queued.insert(q.txn).second) {
        if (why) *why = "duplicate queued request on " + key.to_string();
        return false;
      }
    }
  }
  return true;
}

bool LockTable::empty() const {
  for (const auto& [key, e] : entries_) {
    if (!e.granted.empty() || !e.queue.empty()) return false;
  }
  return true;
}

}  // namespace rvv
