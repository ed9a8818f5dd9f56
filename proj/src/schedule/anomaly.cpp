#include "rvv/schedule/anomaly.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace rvv {

const char* to_string(ConflictEdge::Kind k) {
  switch (k) {
    case ConflictEdge::Kind::Rw: return "rw";
    case ConflictEdge::Kind::Wr: return "wr";
    case ConflictEdge::Kind::Ww: return "ww";
  }
  return "?";
}

std::vector<LostUpdate> detect_lost_updates(const ExecutionTrace& trace) {
  std::vector<LostUpdate> out;
  for (const auto& [key, row] : trace.final_store.rows()) {
    for (std::size_t v = 1; v < row.versions.size(); ++v) {
      TxnId over = row.versions[v].producer;
      TxnId prev = row.versions[v - 1].producer;
      if (over == kNoTxn || prev == kNoTxn || over == prev) continue;
      const TxnRecord* orec = trace.find_txn(over);
      if (!orec || orec->state != TxnState::Committed) continue;
      auto obs = orec->observations.find(key);
      if (obs == orec->observations.end()) continue;
      if (obs->second.version_seq >= v - 1) continue;

      const TxnRecord* prec = trace.find_txn(prev);
      LostUpdate lu;
      lu.key = key;
      lu.victim = prev;
      lu.overwriter = over;
      lu.victim_name = prec ? prec->name : "txn" + std::to_string(prev);
      lu.overwriter_name = orec->name;
      lu.lost_version_seq = v - 1;
      lu.overwriting_version_seq = v;
      if (prec) {
        auto w = prec->last_write_step.find(key);
        if (w != prec->last_write_step.end()) lu.victim_write_step = w->second;
      }
      out.push_back(std::move(lu));
    }
  }
  return out;
}

namespace {

struct AccessOp {
  std::size_t step = 0;
  TxnId txn = kNoTxn;
  RowKey key;
  bool write = false;
};

}  // namespace

SerializabilityVerdict check_serializability(const ExecutionTrace& trace) {
  SerializabilityVerdict verdict;

  auto committed = [&](TxnId id) {
    const TxnRecord* r = trace.find_txn(id);
    return r && r->state == TxnState::Committed;
  };

  std::vector<AccessOp> ops;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TraceStep& s = trace.steps[i];
    if (s.status != StepStatus::Ok) continue;
    if (s.action == TraceStep::Action::Read && committed(s.txn)) {
      ops.push_back({i, s.txn, s.key, false});
    } else if (s.action == TraceStep::Action::Commit && s.receipt) {
      for (const AppliedRow& row : s.receipt->applied) {
        ops.push_back({i, s.txn, row.key, true});
      }
    }
  }

  std::set<std::tuple<TxnId, TxnId, RowKey, int>> seen;
  for (std::size_t a = 0; a < ops.size(); ++a) {
    for (std::size_t b = a + 1; b < ops.size(); ++b) {
      if (ops[a].txn == ops[b].txn || !(ops[a].key == ops[b].key)) continue;
      if (!ops[a].write && !ops[b].write) continue;
      ConflictEdge::Kind kind = ops[a].write && ops[b].write ? ConflictEdge::Kind::Ww
                                : ops[a].write               ? ConflictEdge::Kind::Wr
                                                             : ConflictEdge::Kind::Rw;
      seen.insert({ops[a].txn, ops[b].txn, ops[a].key, static_cast<int>(kind)});
    }
  }

  std::map<TxnId, std::set<TxnId>> adj;
  for (const auto& [from, to, key, kind] : seen) {
    ConflictEdge e;
    e.from = from;
    e.to = to;
    const TxnRecord* fr = trace.find_txn(from);
    const TxnRecord* tr = trace.find_txn(to);
    e.from_name = fr ? fr->name : "txn" + std::to_string(from);
    e.to_name = tr ? tr->name : "txn" + std::to_string(to);
    e.key = key;
    e.kind = static_cast<ConflictEdge::Kind>(kind);
    verdict.edges.push_back(std::move(e));
    adj[from].insert(to);
  }

  // Cycle hunt, nodes visited in id order so the reported cycle is stable.
  std::map<TxnId, int> color;  // 0 fresh, 1 on stack, 2 finished
  std::vector<TxnId> stack;
  std::vector<TxnId> cycle;

  auto dfs = [&](auto&& self, TxnId node) -> bool {
    color[node] = 1;
    stack.push_back(node);
    for (TxnId next : adj[node]) {
      int c = color[next];
      if (c == 1) {
        auto it = std::find(stack.begin(), stack.end(), next);
        cycle.assign(it, stack.end());
        return true;
      }
      if (c == 0 && self(self, next)) return true;
    }
    stack.pop_back();
    color[node] = 2;
    return false;
  };

  for (const auto& [node, targets] : adj) {
    (void)targets;
    if (color[node] == 0 && dfs(dfs, node)) break;
  }

  if (!cycle.empty()) {
    verdict.serializable = false;
    for (TxnId id : cycle) {
      const TxnRecord* r = trace.find_txn(id);
      verdict.cycle.push_back(r ? r->name : "txn" + std::to_string(id));
    }
  }
  return verdict;
}

AnomalyReport analyze(const ExecutionTrace& trace) {
  return AnomalyReport{detect_lost_updates(trace), check_serializability(trace)};
}

}  // namespace rvv
