#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rvv/engine/types.hpp"

namespace rvv {

/// One scheduled action in history notation. TICK carries no transaction.
struct Operation {
  enum class Kind : std::uint8_t { Read, Write, CondWrite, Validate, Commit, Abort, Tick };

  Kind kind = Kind::Tick;
  std::string txn;
  std::string item;
  std::string cond_ref;  // CondWrite: names the stamp bound by the prior read

  bool operator==(const Operation&) const = default;
};

const char* to_string(Operation::Kind k);

/// How a declared transaction runs. Unannotated transactions default to the
/// executing engine's mode and READ COMMITTED.
struct TxnDecl {
  enum class Mode : std::uint8_t { Lscc, Mvcc, Occ };

  std::string name;
  std::optional<Isolation> iso;
  std::optional<Mode> mode;
  /// Amount a write applies: relative for sensitive writes, added to the
  /// last read value for blind and conditional writes. Defaults to 0.
  std::optional<std::int64_t> delta;
  /// Forces the write flavor. Unset: a write preceded by a read of the same
  /// item is blind (absolute value from that read), otherwise sensitive.
  enum class WriteStyle : std::uint8_t { Blind, Sensitive };
  std::optional<WriteStyle> style;

  bool operator==(const TxnDecl&) const = default;
};

struct History {
  std::vector<Operation> ops;
  std::map<std::string, TxnDecl> txns;

  bool operator==(const History&) const = default;
};

/// Lexical or syntactic failure, positioned 1-based.
struct ParseError {
  int line = 0;
  int column = 0;
  std::string expected;

  std::string to_string() const;
};

/// Structurally valid tokens forming an unusable history (operation after a
/// terminal, validate outside OCC, dangling condition reference, ...).
struct IllFormedHistory {
  std::string reason;
};

using ParseResult = std::variant<History, ParseError, IllFormedHistory>;

/// Grammar, whitespace/comma separated:
///   r<T>(<item>)  w<T>(<item>)  w<T>(<item>,<cond>)  val<T>  c<T>  a<T>  tick
/// plus optional header lines
///   txn <T> iso=<rc|rr|snap|ser> mode=<lscc|mvcc|occ> delta=<N> write=<blind|sensitive>
/// Transaction names are case-sensitive alphanumeric runs.
ParseResult parse_history(std::string_view text);

/// Canonical text: headers sorted by transaction name, then one line of
/// operations. parse_history(format_history(h)) == h for well-formed h.
std::string format_history(const History& h);

/// Canonical single-operation token, e.g. "rA(x)" or "wB(x,s1)".
std::string format_operation(const Operation& op);

}  // namespace rvv
