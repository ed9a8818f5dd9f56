#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rvv/engine/types.hpp"

namespace rvv {

/// One committed state of a row. commit_seq 0 marks versions loaded at
/// startup; later versions carry the global commit sequence of their writer.
struct Version {
  std::map<std::string, std::int64_t> columns;
  VersionStamp stamp;
  std::uint64_t commit_seq = 0;
  TxnId producer = kNoTxn;
};

/// Committed history of one row, ascending commit_seq. The vector is never
/// empty once the row exists.
struct RowVersions {
  std::vector<Version> versions;

  const Version& newest() const { return versions.back(); }

  /// Newest version with commit_seq <= seq, or nullptr if none qualifies.
  const Version* at_or_below(std::uint64_t seq) const {
    const Version* best = nullptr;
    for (const auto& v : versions) {
      if (v.commit_seq <= seq) best = &v;
    }
    return best;
  }
};

struct StoreLoadError {
  int line = 0;
  std::string message;
};

/// Multi-row committed state. Keys iterate in sorted order, so dumps and
/// digests are deterministic.
class Store {
 public:
  /// Adds a startup row (commit_seq 0). Replaces any existing row.
  void insert_row(const RowKey& key, std::map<std::string, std::int64_t> columns,
                  VersionStamp initial);

  bool contains(const RowKey& key) const { return rows_.count(key) != 0; }
  const RowVersions* find(const RowKey& key) const;
  RowVersions* find_mut(const RowKey& key);
  std::size_t size() const { return rows_.size(); }

  const std::map<RowKey, RowVersions>& rows() const { return rows_; }

  /// Line-oriented snapshot of newest committed versions:
  ///   table|id|col=val,...|stampkind:stampvalue
  /// one row per line, sorted by key.
  std::string dump() const;

  /// Parses the dump format. On failure returns the positioned error and no
  /// store is produced.
  static std::variant<Store, StoreLoadError> load(std::string_view text);

 private:
  std::map<RowKey, RowVersions> rows_;
};

/// FNV-1a over a byte string; used for store digests in traces.
std::uint64_t fnv1a64(std::string_view bytes);

/// Digest of the committed store state, rendered as 16 hex digits.
std::string store_digest(const Store& store);

}  // namespace rvv
