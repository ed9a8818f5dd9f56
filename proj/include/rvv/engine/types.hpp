#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace rvv {

/// Engine-assigned transaction handle. 0 is reserved for "no transaction"
/// (e.g. the producer of rows loaded at startup).
using TxnId = std::uint64_t;
inline constexpr TxnId kNoTxn = 0;

/// Unit of locking and versioning. Equality is exact string match.
struct RowKey {
  std::string table;
  std::string id;

  auto operator<=>(const RowKey&) const = default;
  bool valid() const { return !table.empty() && !id.empty(); }
  std::string to_string() const { return table + "/" + id; }
};

enum class CcMode : std::uint8_t { Lscc, Mvcc };

enum class Isolation : std::uint8_t {
  ReadCommitted,
  RepeatableRead,
  Snapshot,
  Serializable,
};

enum class TxnState : std::uint8_t { Active, Blocked, Committed, Aborted };

enum class StampKind : std::uint8_t { Counter, CoarseTs, CommitScn };

const char* to_string(CcMode m);
const char* to_string(Isolation i);
const char* to_string(TxnState s);
const char* to_string(StampKind k);

std::optional<CcMode> cc_mode_from_string(const std::string& s);
std::optional<Isolation> isolation_from_string(const std::string& s);
std::optional<StampKind> stamp_kind_from_string(const std::string& s);

/// SNAPSHOT requires a multiversion store; REPEATABLE_READ and SERIALIZABLE
/// require locks. READ_COMMITTED works in both modes.
bool isolation_valid_for(Isolation iso, CcMode mode);

/// Server-maintained row version. A missing value is the indeterminate stamp:
/// commit-scn stamping reads as indeterminate while another transaction holds
/// a write claim on the row.
struct VersionStamp {
  StampKind kind = StampKind::Counter;
  std::optional<std::uint64_t> value = 0;

  static VersionStamp indeterminate(StampKind k) { return {k, std::nullopt}; }
  bool is_indeterminate() const { return !value.has_value(); }

  /// Three-valued match: an indeterminate stamp matches nothing, itself
  /// included. This is the comparison used by conditional writes and
  /// validation; operator== stays structural for tests and serialization.
  bool matches(const VersionStamp& o) const {
    return value.has_value() && o.value.has_value() && kind == o.kind &&
           *value == *o.value;
  }

  bool operator==(const VersionStamp&) const = default;
  std::string to_string() const;
};

/// Parses the "kind:value" form produced by VersionStamp::to_string.
std::optional<VersionStamp> stamp_from_string(const std::string& s);

enum class Err : std::uint8_t {
  None,
  RowNotFound,
  UnknownColumn,
  InvalidIsolationForMode,
  InvalidState,
  DeadlockVictim,
  SerializationConflict,
  ValidationFailed,
  IndeterminateStamp,
};

const char* to_string(Err e);

enum class StepStatus : std::uint8_t { Ok, Blocked, Failed };

/// Every engine call either completes, blocks, or fails with a typed error.
/// Blocked calls leave the transaction parked in a wait queue; re-issuing the
/// same call later resumes it.
template <class T>
struct Result {
  StepStatus status = StepStatus::Ok;
  T value{};
  Err error = Err::None;

  bool ok() const { return status == StepStatus::Ok; }
  bool blocked() const { return status == StepStatus::Blocked; }
  bool failed() const { return status == StepStatus::Failed; }

  static Result okay(T v) { return Result{StepStatus::Ok, std::move(v), Err::None}; }
  static Result block() { return Result{StepStatus::Blocked, T{}, Err::None}; }
  static Result fail(Err e) { return Result{StepStatus::Failed, T{}, e}; }

  const T& operator*() const { return value; }
  const T* operator->() const { return &value; }
};

using VoidResult = Result<std::monostate>;

/// Maps a determinate stamp onto a plain 64-bit integer (the client-side
/// BIGINT view). Injective per kind for counter and commit-scn; for coarse
/// timestamps it is the tick value, so collisions survive the mapping.
Result<std::uint64_t> normalize_stamp(const VersionStamp& s);

}  // namespace rvv
