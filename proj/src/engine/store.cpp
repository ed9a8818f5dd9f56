#include "rvv/engine/store.hpp"

#include <charconv>

namespace rvv {

void Store::insert_row(const RowKey& key, std::map<std::string, std::int64_t> columns,
                       VersionStamp initial) {
  RowVersions rv;
  rv.versions.push_back(Version{std::move(columns), initial, 0, kNoTxn});
  rows_[key] = std::move(rv);
}

const RowVersions* Store::find(const RowKey& key) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

RowVersions* Store::find_mut(const RowKey& key) {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

std::string Store::dump() const {
  std::string out;
  for (const auto& [key, rv] : rows_) {
    const Version& v = rv.newest();
    out += key.table;
    out += '|';
    out += key.id;
    out += '|';
    bool first = true;
    for (const auto& [col, val] : v.columns) {
      if (!first) out += ',';
      first = false;
      out += col;
      out += '=';
      out += std::to_string(val);
    }
    out += '|';
    out += v.stamp.to_string();
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_int64(const std::string& s, std::int64_t* out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::variant<Store, StoreLoadError> Store::load(std::string_view text) {
  Store store;
  int line_no = 0;
  for (const std::string& line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '|');
    if (fields.size() != 4) {
      return StoreLoadError{line_no, "expected 4 |-separated fields"};
    }
    RowKey key{fields[0], fields[1]};
    if (!key.valid()) {
      return StoreLoadError{line_no, "empty table or id"};
    }
    std::map<std::string, std::int64_t> columns;
    for (const std::string& pair : split(fields[2], ',')) {
      auto eq = pair.find('=');
      if (eq == std::string::npos || eq == 0) {
        return StoreLoadError{line_no, "bad column assignment '" + pair + "'"};
      }
      std::int64_t val = 0;
      if (!parse_int64(pair.substr(eq + 1), &val)) {
        return StoreLoadError{line_no, "bad integer in '" + pair + "'"};
      }
      columns[pair.substr(0, eq)] = val;
    }
    if (columns.empty()) {
      return StoreLoadError{line_no, "row without columns"};
    }
    auto stamp = stamp_from_string(fields[3]);
    if (!stamp || stamp->is_indeterminate()) {
      return StoreLoadError{line_no, "bad stamp '" + fields[3] + "'"};
    }
    store.insert_row(key, std::move(columns), *stamp);
  }
  return store;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string store_digest(const Store& store) {
  std::uint64_t h = fnv1a64(store.dump());
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace rvv
