#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rvv/schedule/trace.hpp"

namespace rvv {

/// A committed write that replaced another committed transaction's version
/// while its writer had only observed something older: the replaced update
/// vanished without the overwriter ever seeing it.
struct LostUpdate {
  RowKey key;
  TxnId victim = kNoTxn;      // produced the version that was overwritten
  TxnId overwriter = kNoTxn;  // wrote over it from a stale observation
  std::string victim_name;
  std::string overwriter_name;
  std::uint64_t lost_version_seq = 0;
  std::uint64_t overwriting_version_seq = 0;
  /// Trace step where the victim buffered the write that got lost.
  std::optional<std::size_t> victim_write_step;
};

struct ConflictEdge {
  enum class Kind : std::uint8_t { Rw, Wr, Ww };

  TxnId from = kNoTxn;
  TxnId to = kNoTxn;
  std::string from_name;
  std::string to_name;
  RowKey key;
  Kind kind = Kind::Ww;
};

const char* to_string(ConflictEdge::Kind k);

struct SerializabilityVerdict {
  std::vector<ConflictEdge> edges;  // committed txns only, deduplicated
  bool serializable = true;
  std::vector<std::string> cycle;  // names along one cycle when not serializable
};

/// Version-lineage scan over the final store: for every committed version,
/// was its writer's newest observation of the row older than the version it
/// replaced? Writers with no observation at all are not flagged (a lost
/// update requires a stale read); writers that observed exactly the
/// replaced version are exonerated. Uses version indices, not stamps, so
/// stamp collisions cannot hide an overwrite.
std::vector<LostUpdate> detect_lost_updates(const ExecutionTrace& trace);

/// Conflict graph over committed transactions. Reads conflict at their
/// read step; writes take effect at the commit step that published them.
/// Serializable iff the graph is acyclic.
SerializabilityVerdict check_serializability(const ExecutionTrace& trace);

struct AnomalyReport {
  std::vector<LostUpdate> lost_updates;
  SerializabilityVerdict serializability;
};

AnomalyReport analyze(const ExecutionTrace& trace);

}  // namespace rvv
