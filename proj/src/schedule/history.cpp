#include "rvv/schedule/history.hpp"

#include <cctype>
#include <charconv>

namespace rvv {

const char* to_string(Operation::Kind k) {
  switch (k) {
    case Operation::Kind::Read: return "read";
    case Operation::Kind::Write: return "write";
    case Operation::Kind::CondWrite: return "cond-write";
    case Operation::Kind::Validate: return "validate";
    case Operation::Kind::Commit: return "commit";
    case Operation::Kind::Abort: return "abort";
    case Operation::Kind::Tick: return "tick";
  }
  return "?";
}

std::string ParseError::to_string() const {
  return "parse error at " + std::to_string(line) + ":" + std::to_string(column) +
         ": expected " + expected;
}

namespace {

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_ident_char(char c) { return is_alnum(c) || c == '_'; }

bool all_alnum(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_alnum(c)) return false;
  }
  return true;
}

struct Token {
  std::string text;
  int line = 0;
  int col = 0;
};

/// Splits one line on whitespace and top-level commas; commas inside
/// parentheses stay part of their token, so wA(x,s1) is a single token.
std::vector<Token> tokenize_line(std::string_view text, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
      continue;
    }
    std::size_t start = i;
    int depth = 0;
    while (i < text.size()) {
      char d = text[i];
      if (std::isspace(static_cast<unsigned char>(d))) break;
      if (d == ',' && depth == 0) break;
      if (d == '(') ++depth;
      if (d == ')' && depth > 0) --depth;
      ++i;
    }
    out.push_back({std::string(text.substr(start, i - start)), line_no,
                   static_cast<int>(start) + 1});
  }
  return out;
}

/// Parses one operation token. Column positions are relative to tok.col.
std::variant<Operation, ParseError> parse_op_token(const Token& tok) {
  const std::string& s = tok.text;
  auto err = [&](std::size_t offset, std::string expected) {
    return ParseError{tok.line, tok.col + static_cast<int>(offset), std::move(expected)};
  };

  if (s == "tick") return Operation{Operation::Kind::Tick, "", "", ""};

  if (s.rfind("val", 0) == 0) {
    std::string name = s.substr(3);
    if (!all_alnum(name)) return err(3, "transaction name after 'val'");
    return Operation{Operation::Kind::Validate, std::move(name), "", ""};
  }

  if (s[0] == 'c' || s[0] == 'a') {
    std::string name = s.substr(1);
    if (!all_alnum(name)) return err(1, "transaction name");
    Operation::Kind k = s[0] == 'c' ? Operation::Kind::Commit : Operation::Kind::Abort;
    return Operation{k, std::move(name), "", ""};
  }

  if (s[0] == 'r' || s[0] == 'w') {
    Operation::Kind base = s[0] == 'r' ? Operation::Kind::Read : Operation::Kind::Write;
    std::size_t i = 1;
    while (i < s.size() && is_alnum(s[i])) ++i;
    if (i == 1) return err(1, "transaction name");
    std::string name = s.substr(1, i - 1);
    if (i >= s.size() || s[i] != '(') return err(i, "'('");
    ++i;
    std::size_t item_start = i;
    while (i < s.size() && is_ident_char(s[i])) ++i;
    if (i == item_start) return err(i, "item name");
    std::string item = s.substr(item_start, i - item_start);
    std::string cond;
    if (i < s.size() && s[i] == ',') {
      if (base == Operation::Kind::Read) return err(i, "')'");
      ++i;
      std::size_t cond_start = i;
      while (i < s.size() && is_ident_char(s[i])) ++i;
      if (i == cond_start) return err(i, "condition name");
      cond = s.substr(cond_start, i - cond_start);
      base = Operation::Kind::CondWrite;
    }
    if (i >= s.size() || s[i] != ')') return err(i, "')'");
    ++i;
    if (i != s.size()) return err(i, "end of token");
    return Operation{base, std::move(name), std::move(item), std::move(cond)};
  }

  return err(0, "operation (r/w/val/c/a/tick) or 'txn' header");
}

std::variant<std::monostate, ParseError, IllFormedHistory> parse_header(
    const std::vector<Token>& toks, History& h) {
  auto err = [&](const Token& t, std::size_t offset, std::string expected) {
    return ParseError{t.line, t.col + static_cast<int>(offset), std::move(expected)};
  };
  if (toks.size() < 2 || !all_alnum(toks[1].text)) {
    const Token& at = toks.size() < 2 ? toks[0] : toks[1];
    return err(at, toks.size() < 2 ? at.text.size() : 0, "transaction name after 'txn'");
  }
  TxnDecl decl;
  decl.name = toks[1].text;
  for (std::size_t i = 2; i < toks.size(); ++i) {
    const std::string& t = toks[i].text;
    auto eq = t.find('=');
    if (eq == std::string::npos) return err(toks[i], 0, "key=value");
    std::string key = t.substr(0, eq);
    std::string val = t.substr(eq + 1);
    if (key == "iso") {
      auto iso = isolation_from_string(val);
      if (!iso) return err(toks[i], eq + 1, "rc|rr|snap|ser");
      decl.iso = *iso;
    } else if (key == "mode") {
      if (val == "lscc" || val == "LSCC") {
        decl.mode = TxnDecl::Mode::Lscc;
      } else if (val == "mvcc" || val == "MVCC") {
        decl.mode = TxnDecl::Mode::Mvcc;
      } else if (val == "occ" || val == "OCC") {
        decl.mode = TxnDecl::Mode::Occ;
      } else {
        return err(toks[i], eq + 1, "lscc|mvcc|occ");
      }
    } else if (key == "delta") {
      std::int64_t n = 0;
      const char* first = val.data();
      const char* last = val.data() + val.size();
      auto [p, ec] = std::from_chars(first, last, n);
      if (ec != std::errc{} || p != last) return err(toks[i], eq + 1, "integer");
      decl.delta = n;
    } else if (key == "write") {
      if (val == "blind") {
        decl.style = TxnDecl::WriteStyle::Blind;
      } else if (val == "sensitive") {
        decl.style = TxnDecl::WriteStyle::Sensitive;
      } else {
        return err(toks[i], eq + 1, "blind|sensitive");
      }
    } else {
      return err(toks[i], 0, "iso=/mode=/delta=/write=");
    }
  }
  if (h.txns.count(decl.name) != 0) {
    return IllFormedHistory{"txn " + decl.name + " declared twice"};
  }
  h.txns[decl.name] = std::move(decl);
  return std::monostate{};
}

std::optional<IllFormedHistory> check_well_formed(History& h) {
  if (h.ops.empty()) return IllFormedHistory{"history has no operations"};

  for (const auto& op : h.ops) {
    if (op.kind != Operation::Kind::Tick && h.txns.count(op.txn) == 0) {
      h.txns[op.txn].name = op.txn;
    }
  }

  for (const auto& [name, decl] : h.txns) {
    if (decl.mode == TxnDecl::Mode::Occ && decl.iso) {
      return IllFormedHistory{"txn " + name + ": isolation level does not apply to occ"};
    }
    if (decl.iso && decl.mode && decl.mode != TxnDecl::Mode::Occ) {
      CcMode m = decl.mode == TxnDecl::Mode::Lscc ? CcMode::Lscc : CcMode::Mvcc;
      if (!isolation_valid_for(*decl.iso, m)) {
        return IllFormedHistory{"txn " + name + ": iso " + to_string(*decl.iso) +
                                " invalid for mode " + to_string(m)};
      }
    }
  }

  std::map<std::string, bool> finished;
  std::map<std::string, std::map<std::string, bool>> read_seen;  // txn -> item
  for (const auto& op : h.ops) {
    if (op.kind == Operation::Kind::Tick) continue;
    if (finished[op.txn]) {
      return IllFormedHistory{"operation after terminal operation of txn " + op.txn};
    }
    switch (op.kind) {
      case Operation::Kind::Read:
        read_seen[op.txn][op.item] = true;
        break;
      case Operation::Kind::CondWrite:
        if (!read_seen[op.txn][op.item]) {
          return IllFormedHistory{"condition " + op.cond_ref + " of txn " + op.txn +
                                  " has no prior read of " + op.item};
        }
        break;
      case Operation::Kind::Validate: {
        auto it = h.txns.find(op.txn);
        if (it == h.txns.end() || it->second.mode != TxnDecl::Mode::Occ) {
          return IllFormedHistory{"val" + op.txn + " requires 'txn " + op.txn +
                                  " mode=occ'"};
        }
        break;
      }
      case Operation::Kind::Commit:
      case Operation::Kind::Abort:
        finished[op.txn] = true;
        break;
      default:
        break;
    }
  }
  return std::nullopt;
}

}  // namespace

ParseResult parse_history(std::string_view text) {
  History h;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    ++line_no;

    auto toks = tokenize_line(line, line_no);
    if (!toks.empty()) {
      if (toks[0].text == "txn") {
        auto hr = parse_header(toks, h);
        if (auto* err = std::get_if<ParseError>(&hr)) return *err;
        if (auto* ill = std::get_if<IllFormedHistory>(&hr)) return *ill;
      } else {
        for (const auto& tok : toks) {
          auto parsed = parse_op_token(tok);
          if (auto* err = std::get_if<ParseError>(&parsed)) return *err;
          h.ops.push_back(std::move(std::get<Operation>(parsed)));
        }
      }
    }

    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  if (auto ill = check_well_formed(h)) return *ill;
  return h;
}

std::string format_operation(const Operation& op) {
  switch (op.kind) {
    case Operation::Kind::Read: return "r" + op.txn + "(" + op.item + ")";
    case Operation::Kind::Write: return "w" + op.txn + "(" + op.item + ")";
    case Operation::Kind::CondWrite:
      return "w" + op.txn + "(" + op.item + "," + op.cond_ref + ")";
    case Operation::Kind::Validate: return "val" + op.txn;
    case Operation::Kind::Commit: return "c" + op.txn;
    case Operation::Kind::Abort: return "a" + op.txn;
    case Operation::Kind::Tick: return "tick";
  }
  return "?";
}

std::string format_history(const History& h) {
  std::string out;
  std::map<std::string, bool> has_ops;
  for (const auto& op : h.ops) {
    if (op.kind != Operation::Kind::Tick) has_ops[op.txn] = true;
  }
  for (const auto& [name, decl] : h.txns) {
    bool annotated = decl.iso || decl.mode || decl.delta || decl.style;
    if (!annotated && has_ops[name]) continue;  // auto-registered on parse
    out += "txn " + name;
    if (decl.iso) out += std::string(" iso=") + to_string(*decl.iso);
    if (decl.mode) {
      out += " mode=";
      out += decl.mode == TxnDecl::Mode::Lscc   ? "lscc"
             : decl.mode == TxnDecl::Mode::Mvcc ? "mvcc"
                                                : "occ";
    }
    if (decl.delta) out += " delta=" + std::to_string(*decl.delta);
    if (decl.style) {
      out += std::string(" write=") +
             (decl.style == TxnDecl::WriteStyle::Blind ? "blind" : "sensitive");
    }
    out += "\n";
  }
  for (std::size_t i = 0; i < h.ops.size(); ++i) {
    if (i != 0) out += " ";
    out += format_operation(h.ops[i]);
  }
  if (!h.ops.empty()) out += "\n";
  return out;
}

}  // namespace rvv
