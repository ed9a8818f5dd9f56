#include "rvv/engine/types.hpp"

namespace rvv {

const char* to_string(CcMode m) {
  switch (m) {
    case CcMode::Lscc: return "lscc";
    case CcMode::Mvcc: return "mvcc";
  }
  return "?";
}

const char* to_string(Isolation i) {
  switch (i) {
    case Isolation::ReadCommitted: return "rc";
    case Isolation::RepeatableRead: return "rr";
    case Isolation::Snapshot: return "snap";
    case Isolation::Serializable: return "ser";
  }
  return "?";
}

const char* to_string(TxnState s) {
  switch (s) {
    case TxnState::Active: return "ACTIVE";
    case TxnState::Blocked: return "BLOCKED";
    case TxnState::Committed: return "COMMITTED";
    case TxnState::Aborted: return "ABORTED";
  }
  return "?";
}

const char* to_string(StampKind k) {
  switch (k) {
    case StampKind::Counter: return "counter";
    case StampKind::CoarseTs: return "coarse";
    case StampKind::CommitScn: return "scn";
  }
  return "?";
}

std::optional<CcMode> cc_mode_from_string(const std::string& s) {
  if (s == "lscc" || s == "LSCC") return CcMode::Lscc;
  if (s == "mvcc" || s == "MVCC") return CcMode::Mvcc;
  return std::nullopt;
}

std::optional<Isolation> isolation_from_string(const std::string& s) {
  if (s == "rc" || s == "read_committed") return Isolation::ReadCommitted;
  if (s == "rr" || s == "repeatable_read") return Isolation::RepeatableRead;
  if (s == "snap" || s == "snapshot") return Isolation::Snapshot;
  if (s == "ser" || s == "serializable") return Isolation::Serializable;
  return std::nullopt;
}

std::optional<StampKind> stamp_kind_from_string(const std::string& s) {
  if (s == "counter") return StampKind::Counter;
  if (s == "coarse") return StampKind::CoarseTs;
  if (s == "scn") return StampKind::CommitScn;
  return std::nullopt;
}

bool isolation_valid_for(Isolation iso, CcMode mode) {
  switch (iso) {
    case Isolation::ReadCommitted: return true;
    case Isolation::RepeatableRead:
    case Isolation::Serializable: return mode == CcMode::Lscc;
    case Isolation::Snapshot: return mode == CcMode::Mvcc;
  }
  return false;
}

std::string VersionStamp::to_string() const {
  std::string out = rvv::to_string(kind);
  out += ':';
  out += value.has_value() ? std::to_string(*value) : "indet";
  return out;
}

std::optional<VersionStamp> stamp_from_string(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos) return std::nullopt;
  auto kind = stamp_kind_from_string(s.substr(0, colon));
  if (!kind) return std::nullopt;
  std::string rest = s.substr(colon + 1);
  if (rest == "indet") return VersionStamp::indeterminate(*kind);
  if (rest.empty()) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : rest) {
    if (c < '0' || c > '9') return std::nullopt;
    if (v > (UINT64_MAX - (c - '0')) / 10) return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return VersionStamp{*kind, v};
}

const char* to_string(Err e) {
  switch (e) {
    case Err::None: return "none";
    case Err::RowNotFound: return "RowNotFound";
    case Err::UnknownColumn: return "UnknownColumn";
    case Err::InvalidIsolationForMode: return "InvalidIsolationForMode";
    case Err::InvalidState: return "InvalidState";
    case Err::DeadlockVictim: return "DeadlockVictim";
    case Err::SerializationConflict: return "SerializationConflict";
    case Err::ValidationFailed: return "ValidationFailed";
    case Err::IndeterminateStamp: return "IndeterminateStamp";
  }
  return "?";
}

Result<std::uint64_t> normalize_stamp(const VersionStamp& s) {
  if (s.is_indeterminate()) return Result<std::uint64_t>::fail(Err::IndeterminateStamp);
  return Result<std::uint64_t>::okay(*s.value);
}

}  // namespace rvv
