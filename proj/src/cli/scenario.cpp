#include "rvv/cli/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "rvv/patterns/patterns.hpp"

namespace rvv {

namespace {

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return std::nullopt;
  for (std::size_t j = i; j < s.size(); ++j) {
    if (!std::isdigit(static_cast<unsigned char>(s[j]))) return std::nullopt;
  }
  try {
    return std::stoll(s);
  } catch (...) {
    return std::nullopt;
  }
}

/// "col=val" split; nullopt when there is no '='.
std::optional<std::pair<std::string, std::string>> split_kv(const std::string& tok) {
  auto eq = tok.find('=');
  if (eq == std::string::npos || eq == 0) return std::nullopt;
  return std::make_pair(tok.substr(0, eq), tok.substr(eq + 1));
}

const std::set<std::string>& pattern_names() {
  static const std::set<std::string> names{"blind",    "sensitive", "conditional",
                                           "reselect", "occ",       "select-update"};
  return names;
}

}  // namespace

bool looks_like_scenario(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string body = strip_comment(line);
    if (is_blank(body)) continue;
    auto toks = split_ws(body);
    return !toks.empty() && toks[0] == "name";
  }
  return false;
}

std::variant<Scenario, ScenarioError> parse_scenario_text(const std::string& text) {
  Scenario sc;
  // history DSL lines with their origin (file line, column shift) so parse
  // errors can point back into the scenario file
  std::vector<std::string> history_lines;
  std::vector<std::pair<std::size_t, std::size_t>> history_origin;
  bool in_history_block = false;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;

  auto err = [&](std::string message) {
    return ScenarioError{lineno, 1, std::move(message)};
  };

  while (std::getline(in, raw)) {
    ++lineno;
    std::string body = strip_comment(raw);
    if (is_blank(body)) continue;

    if (in_history_block) {
      auto toks = split_ws(body);
      if (toks.size() == 1 && toks[0] == "end-history") {
        in_history_block = false;
        continue;
      }
      history_lines.push_back(body);
      history_origin.emplace_back(lineno, 0);
      continue;
    }

    auto toks = split_ws(body);
    const std::string& key = toks[0];

    if (key == "name") {
      if (toks.size() != 2) return err("name takes one value");
      sc.name = toks[1];
    } else if (key == "engine") {
      if (toks.size() != 2) return err("engine takes lscc or mvcc");
      auto m = cc_mode_from_string(toks[1]);
      if (!m) return err("unknown engine '" + toks[1] + "' (lscc, mvcc)");
      sc.config.mode = *m;
    } else if (key == "stamp") {
      if (toks.size() != 2) return err("stamp takes counter, coarse or scn");
      auto s = stamp_kind_from_string(toks[1]);
      if (!s) return err("unknown stamp '" + toks[1] + "' (counter, coarse, scn)");
      sc.config.stamp = *s;
    } else if (key == "iso") {
      if (toks.size() != 2) return err("iso takes rc, rr, snap or ser");
      auto i = isolation_from_string(toks[1]);
      if (!i) return err("unknown isolation '" + toks[1] + "' (rc, rr, snap, ser)");
      sc.default_iso = *i;
    } else if (key == "ulock") {
      if (toks.size() != 2 || (toks[1] != "on" && toks[1] != "off")) {
        return err("ulock takes on or off");
      }
      sc.config.update_lock_first = toks[1] == "on";
    } else if (key == "resolution") {
      auto n = toks.size() == 2 ? parse_int(toks[1]) : std::nullopt;
      if (!n || *n < 1) return err("resolution takes a positive tick count");
      sc.config.clock_resolution_ticks = static_cast<std::uint64_t>(*n);
    } else if (key == "invariants") {
      if (toks.size() != 2 || (toks[1] != "on" && toks[1] != "off")) {
        return err("invariants takes on or off");
      }
      sc.check_invariants = toks[1] == "on";
    } else if (key == "row") {
      if (toks.size() < 4) return err("row takes <table> <id> <col>=<val>...");
      RowSpec row{toks[1], toks[2], {}};
      for (std::size_t i = 3; i < toks.size(); ++i) {
        auto kv = split_kv(toks[i]);
        auto val = kv ? parse_int(kv->second) : std::nullopt;
        if (!kv || !val) return err("bad column '" + toks[i] + "' (want col=int)");
        row.columns[kv->first] = *val;
      }
      sc.row_specs.push_back(std::move(row));
    } else if (key == "item") {
      if (toks.size() != 5) return err("item takes <name> <table> <id> <col>");
      sc.items[toks[1]] = ItemBinding{RowKey{toks[2], toks[3]}, toks[4]};
    } else if (key == "history") {
      if (toks.size() < 2) return err("history takes inline operations");
      auto start = body.find("history") + 7;
      while (start < body.size() && std::isspace(static_cast<unsigned char>(body[start]))) {
        ++start;
      }
      history_lines.push_back(body.substr(start));
      history_origin.emplace_back(lineno, start);
    } else if (key == "begin-history") {
      if (toks.size() != 1) return err("begin-history takes no arguments");
      in_history_block = true;
    } else if (key == "program") {
      if (toks.size() < 3) return err("program takes <name> <pattern> [key=value...]");
      ProgramSpec ps;
      ps.name = toks[1];
      ps.pattern = toks[2];
      if (pattern_names().count(ps.pattern) == 0) {
        return err("unknown pattern '" + ps.pattern +
                   "' (blind, sensitive, conditional, reselect, occ, select-update)");
      }
      for (std::size_t i = 3; i < toks.size(); ++i) {
        auto kv = split_kv(toks[i]);
        if (!kv) return err("bad program option '" + toks[i] + "'");
        if (kv->first == "item") {
          ps.item = kv->second;
        } else if (kv->first == "delta") {
          auto v = parse_int(kv->second);
          if (!v) return err("delta wants an integer");
          ps.delta = *v;
        } else if (kv->first == "iso") {
          auto v = isolation_from_string(kv->second);
          if (!v) return err("unknown isolation '" + kv->second + "'");
          ps.iso = *v;
        } else if (kv->first == "retries") {
          auto v = parse_int(kv->second);
          if (!v || *v < 0) return err("retries wants a non-negative integer");
          ps.retries = static_cast<std::size_t>(*v);
        } else {
          return err("unknown program option '" + kv->first + "'");
        }
      }
      if (ps.item.empty()) return err("program needs item=<name>");
      sc.programs.push_back(std::move(ps));
    } else if (key == "schedule") {
      if (toks.size() < 2) return err("schedule takes program names");
      sc.schedule.assign(toks.begin() + 1, toks.end());
    } else if (key == "expect") {
      if (toks.size() < 3) return err("expect takes <key> <value>");
      std::string value = toks[2];
      for (std::size_t i = 3; i < toks.size(); ++i) value += " " + toks[i];
      sc.expects.emplace_back(toks[1], std::move(value));
    } else {
      return err("unknown directive '" + key + "'");
    }
  }

  if (in_history_block) {
    return ScenarioError{lineno, 1, "begin-history without end-history"};
  }
  if (sc.name.empty()) {
    return ScenarioError{1, 1, "scenario needs a name directive"};
  }

  if (!history_lines.empty()) {
    std::string joined;
    for (const auto& l : history_lines) {
      joined += l;
      joined += '\n';
    }
    ParseResult pr = parse_history(joined);
    if (const auto* pe = std::get_if<ParseError>(&pr)) {
      std::size_t idx = pe->line > 0 ? static_cast<std::size_t>(pe->line) - 1 : 0;
      std::size_t file_line = idx < history_origin.size() ? history_origin[idx].first : 0;
      std::size_t shift = idx < history_origin.size() ? history_origin[idx].second : 0;
      return ScenarioError{file_line, static_cast<std::size_t>(pe->column) + shift,
                           "expected " + pe->expected};
    }
    if (const auto* ill = std::get_if<IllFormedHistory>(&pr)) {
      return ScenarioError{history_origin.front().first, 1, ill->reason};
    }
    sc.history = std::get<History>(std::move(pr));
  }

  materialize_rows(sc);
  return sc;
}

std::variant<Scenario, ScenarioError> scenario_from_history_text(const std::string& text,
                                                                 std::string name) {
  ParseResult pr = parse_history(text);
  if (const auto* pe = std::get_if<ParseError>(&pr)) {
    return ScenarioError{static_cast<std::size_t>(pe->line),
                         static_cast<std::size_t>(pe->column), "expected " + pe->expected};
  }
  if (const auto* ill = std::get_if<IllFormedHistory>(&pr)) {
    return ScenarioError{1, 1, ill->reason};
  }
  Scenario sc;
  sc.name = std::move(name);
  sc.history = std::get<History>(std::move(pr));
  materialize_rows(sc);
  return sc;
}

void materialize_rows(Scenario& sc) {
  sc.initial = Store{};
  for (const auto& row : sc.row_specs) {
    sc.initial.insert_row(RowKey{row.table, row.id}, row.columns,
                          VersionStamp{sc.config.stamp, 0});
  }
}

void seed_default_rows(Scenario& sc) {
  std::set<std::string> referenced;
  if (sc.history) {
    for (const auto& op : sc.history->ops) {
      if (!op.item.empty()) referenced.insert(op.item);
    }
  }
  for (const auto& ps : sc.programs) referenced.insert(ps.item);

  for (const auto& item : referenced) {
    if (sc.items.count(item) == 0) sc.items[item] = default_binding(item);
  }
  for (const auto& [item, binding] : sc.items) {
    if (!sc.initial.contains(binding.key)) {
      sc.initial.insert_row(binding.key, {{binding.column, 1000}},
                            VersionStamp{sc.config.stamp, 0});
    }
  }
}

std::vector<std::unique_ptr<Program>> make_pattern_programs(const Scenario& sc) {
  std::vector<std::unique_ptr<Program>> out;
  for (std::size_t i = 0; i < sc.programs.size(); ++i) {
    const ProgramSpec& ps = sc.programs[i];
    const ItemBinding& b = sc.items.at(ps.item);
    if (ps.pattern == "blind") {
      out.push_back(
          std::make_unique<SplitBlindProgram>(ps.name, b.key, b.column, ps.delta, i));
    } else if (ps.pattern == "conditional") {
      out.push_back(
          std::make_unique<SplitConditionalProgram>(ps.name, b.key, b.column, ps.delta, i));
    } else if (ps.pattern == "sensitive") {
      out.push_back(
          std::make_unique<SensitiveProgram>(ps.name, b.key, b.column, ps.delta, i));
    } else if (ps.pattern == "reselect") {
      out.push_back(std::make_unique<ReselectProgram>(
          ps.name, b.key, b.column, ps.delta, ps.iso.value_or(Isolation::RepeatableRead),
          ps.retries, i));
    } else if (ps.pattern == "occ") {
      out.push_back(
          std::make_unique<OccUpdateProgram>(ps.name, b.key, b.column, ps.delta, i));
    } else if (ps.pattern == "select-update") {
      out.push_back(std::make_unique<SelectUpdateProgram>(
          ps.name, b.key, b.column, ps.delta, ps.iso.value_or(Isolation::ReadCommitted), i));
    }
  }
  return out;
}

std::string validate_scenario(const Scenario& sc) {
  if (sc.name.empty()) return "scenario has no name";
  if (sc.history && !sc.programs.empty()) {
    return "scenario mixes a history with pattern programs; use one or the other";
  }
  if (!sc.history && sc.programs.empty()) {
    return "scenario has neither a history nor pattern programs";
  }
  std::set<std::string> names;
  for (const auto& ps : sc.programs) {
    if (pattern_names().count(ps.pattern) == 0) return "unknown pattern '" + ps.pattern + "'";
    if (!names.insert(ps.name).second) return "duplicate program name '" + ps.name + "'";
    if (sc.items.count(ps.item) == 0) return "program references unbound item '" + ps.item + "'";
    if (ps.pattern == "occ" && ps.iso) return "occ programs take no isolation level";
  }
  for (const auto& [item, binding] : sc.items) {
    const RowVersions* row = sc.initial.find(binding.key);
    if (!row) return "item '" + item + "' points at missing row " + binding.key.to_string();
    if (row->newest().columns.count(binding.column) == 0) {
      return "item '" + item + "' names missing column '" + binding.column + "'";
    }
  }
  if (!sc.schedule.empty()) {
    std::set<std::string> known;
    if (sc.history) {
      for (const auto& [n, decl] : sc.history->txns) known.insert(n);
    }
    for (const auto& ps : sc.programs) known.insert(ps.name);
    for (const auto& n : sc.schedule) {
      if (known.count(n) == 0) return "schedule names unknown program '" + n + "'";
    }
  }
  return "";
}

}  // namespace rvv
