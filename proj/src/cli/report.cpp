#include "rvv/cli/report.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace rvv {

bool RunReport::all_expects_ok() const {
  return std::all_of(expects.begin(), expects.end(),
                     [](const ExpectResult& e) { return e.ok; });
}

bool SweepReport::all_expects_ok() const {
  return std::all_of(expects.begin(), expects.end(),
                     [](const ExpectResult& e) { return e.ok; });
}

std::string config_summary(const EngineConfig& config, Isolation default_iso) {
  std::string out = std::string("engine=") + to_string(config.mode);
  out += std::string(" stamp=") + to_string(config.stamp);
  out += std::string(" iso=") + to_string(default_iso);
  out += std::string(" ulock=") + (config.update_lock_first ? "on" : "off");
  out += " resolution=" + std::to_string(config.clock_resolution_ticks);
  return out;
}

namespace {

struct Palette {
  const char* red = "";
  const char* green = "";
  const char* dim = "";
  const char* reset = "";
};

Palette palette(bool color) {
  if (!color) return {};
  return Palette{"\x1b[31m", "\x1b[32m", "\x1b[2m", "\x1b[0m"};
}

std::string config_record(const EngineConfig& c, Isolation iso, std::uint64_t seed) {
  std::string out = std::string("config|engine=") + to_string(c.mode);
  out += std::string("|stamp=") + to_string(c.stamp);
  out += std::string("|iso=") + to_string(iso);
  out += std::string("|ulock=") + (c.update_lock_first ? "on" : "off");
  out += "|resolution=" + std::to_string(c.clock_resolution_ticks);
  out += "|seed=" + std::to_string(seed);
  return out;
}

std::string opt_int(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : "-";
}

std::string opt_step(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : "-";
}

std::vector<std::string> dump_lines(const Store& store) {
  std::vector<std::string> out;
  std::istringstream in(store.dump());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string blocked_text(const std::vector<std::string>& blocked) {
  if (blocked.empty()) return "";
  std::string out = "blocked={";
  for (std::size_t i = 0; i < blocked.size(); ++i) {
    if (i) out += ",";
    out += blocked[i];
  }
  out += "}";
  return out;
}

void machine_run(std::ostream& out, const RunReport& r) {
  out << "report|1\n";
  out << "scenario|" << r.scenario << "\n";
  out << config_record(r.config, r.default_iso, r.seed) << "\n";
  if (!r.trace.error.empty()) out << "error|" << r.trace.error << "\n";
  for (std::size_t i = 0; i < r.trace.steps.size(); ++i) {
    const TraceStep& s = r.trace.steps[i];
    out << "step|" << i << "|" << s.label << "|" << s.result << "|" << s.digest << "\n";
  }
  for (const auto& t : r.trace.txns) {
    out << "txn|" << t.name << "|" << t.id << "|" << to_string(t.state) << "|"
        << (t.abort_reason == Err::None ? "-" : to_string(t.abort_reason)) << "\n";
  }
  for (const auto& o : r.outcomes) {
    out << "outcome|" << o.name << "|" << to_string(o.status) << "|" << opt_int(o.written)
        << "|" << o.attempts << "\n";
  }
  for (const auto& line : dump_lines(r.trace.final_store)) out << "final|" << line << "\n";
  for (const auto& lu : r.anomalies.lost_updates) {
    out << "lost-update|" << lu.key.to_string() << "|victim=" << lu.victim_name
        << "|overwriter=" << lu.overwriter_name
        << "|victim-write-step=" << opt_step(lu.victim_write_step) << "\n";
  }
  for (const auto& e : r.anomalies.serializability.edges) {
    out << "conflict-edge|" << e.from_name << "|" << e.to_name << "|" << e.key.to_string()
        << "|" << to_string(e.kind) << "\n";
  }
  out << "serializable|" << (r.anomalies.serializability.serializable ? "yes" : "no") << "\n";
  for (const auto& e : r.expects) {
    out << "expect|" << e.key << "|" << e.want << "|" << e.got << "|"
        << (e.ok ? "ok" : "MISMATCH") << "\n";
  }
  if (r.expects.empty()) {
    out << "verdict|-\n";
  } else {
    out << "verdict|" << (r.all_expects_ok() ? "pass" : "fail") << "\n";
  }
}

void text_run(std::ostream& out, const RunReport& r, bool color) {
  Palette p = palette(color);
  out << "scenario " << r.scenario << "\n";
  out << config_summary(r.config, r.default_iso) << " seed=" << r.seed << "\n";
  if (!r.trace.error.empty()) {
    out << p.red << "error: " << r.trace.error << p.reset << "\n";
    return;
  }

  std::size_t label_w = 4;
  for (const auto& s : r.trace.steps) label_w = std::max(label_w, s.label.size());

  out << "\nsteps\n";
  for (std::size_t i = 0; i < r.trace.steps.size(); ++i) {
    const TraceStep& s = r.trace.steps[i];
    out << "  " << (i < 10 ? " " : "") << i << "  " << s.label
        << std::string(label_w - s.label.size() + 2, ' ') << s.result;
    std::string b = blocked_text(s.blocked_after);
    if (!b.empty()) out << "  " << p.dim << b << p.reset;
    out << "\n";
  }

  out << "\ntransactions\n";
  for (const auto& t : r.trace.txns) {
    out << "  " << t.name << "  #" << t.id << "  " << to_string(t.state);
    if (t.abort_reason != Err::None) out << " (" << to_string(t.abort_reason) << ")";
    out << "\n";
  }

  if (!r.outcomes.empty()) {
    out << "\noutcomes\n";
    for (const auto& o : r.outcomes) {
      out << "  " << o.name << "  " << to_string(o.status);
      if (o.written) out << "  written=" << *o.written;
      out << "  attempts=" << o.attempts << "\n";
    }
  }

  out << "\nfinal state\n";
  for (const auto& line : dump_lines(r.trace.final_store)) out << "  " << line << "\n";

  out << "\nanomalies\n";
  if (r.anomalies.lost_updates.empty()) {
    out << "  no lost updates\n";
  }
  for (const auto& lu : r.anomalies.lost_updates) {
    out << "  " << p.red << "lost update on " << lu.key.to_string() << ": victim "
        << lu.victim_name << ", overwriter " << lu.overwriter_name
        << ", victim write step " << opt_step(lu.victim_write_step) << p.reset << "\n";
  }
  for (const auto& e : r.anomalies.serializability.edges) {
    out << "  edge " << e.from_name << "->" << e.to_name << " " << to_string(e.kind) << "("
        << e.key.to_string() << ")\n";
  }
  out << "  serializable: " << (r.anomalies.serializability.serializable ? "yes" : "no")
      << "\n";

  if (!r.expects.empty()) {
    out << "\nexpectations\n";
    for (const auto& e : r.expects) {
      if (e.ok) {
        out << "  " << p.green << "ok" << p.reset << "       " << e.key << " = " << e.got
            << "\n";
      } else {
        out << "  " << p.red << "MISMATCH" << p.reset << " " << e.key << ": want " << e.want
            << ", got " << e.got << "\n";
      }
    }
    bool pass = r.all_expects_ok();
    out << "\nverdict " << (pass ? p.green : p.red) << (pass ? "pass" : "fail") << p.reset
        << "\n";
  }
}

void machine_sweep(std::ostream& out, const SweepReport& r) {
  out << "report|1\n";
  out << "sweep|" << r.scenario << "\n";
  out << config_record(r.config, r.default_iso, r.seed) << "\n";
  out << "mode|" << (r.sampled ? "sample" : "exhaustive") << "|schedules=" << r.schedules
      << "|nominal-ops=" << r.nominal_ops << "\n";
  for (const auto& [state, count] : r.final_counts) {
    out << "final-state|" << state << "|" << count << "\n";
  }
  out << "lost-updates|" << r.with_lost_updates << "\n";
  out << "non-serializable|" << r.non_serializable << "\n";
  for (const auto& c : r.counterexamples) {
    out << "counterexample|" << c.signature << "|" << c.schedule_index << "|" << c.ops << "\n";
  }
  for (const auto& e : r.expects) {
    out << "expect|" << e.key << "|" << e.want << "|" << e.got << "|"
        << (e.ok ? "ok" : "MISMATCH") << "\n";
  }
  if (r.expects.empty()) {
    out << "verdict|-\n";
  } else {
    out << "verdict|" << (r.all_expects_ok() ? "pass" : "fail") << "\n";
  }
}

void text_sweep(std::ostream& out, const SweepReport& r, bool color) {
  Palette p = palette(color);
  out << "sweep " << r.scenario << "\n";
  out << config_summary(r.config, r.default_iso) << " seed=" << r.seed << "\n";
  out << (r.sampled ? "sampled" : "exhaustive") << " schedules=" << r.schedules
      << " nominal-ops=" << r.nominal_ops << "\n";

  out << "\nfinal states\n";
  for (const auto& [state, count] : r.final_counts) {
    out << "  " << state << "  x" << count << "\n";
  }

  out << "\nschedules with lost updates: ";
  if (r.with_lost_updates == 0) {
    out << p.green << "0" << p.reset << "\n";
  } else {
    out << p.red << r.with_lost_updates << p.reset << "\n";
  }
  out << "non-serializable schedules:  " << r.non_serializable << "\n";

  if (!r.counterexamples.empty()) {
    out << "\ncounterexamples\n";
    for (const auto& c : r.counterexamples) {
      out << "  " << p.red << c.signature << p.reset << "  (schedule " << c.schedule_index
          << ")\n    " << c.ops << "\n";
    }
  }

  if (!r.expects.empty()) {
    out << "\nexpectations\n";
    for (const auto& e : r.expects) {
      if (e.ok) {
        out << "  " << p.green << "ok" << p.reset << "       " << e.key << " = " << e.got
            << "\n";
      } else {
        out << "  " << p.red << "MISMATCH" << p.reset << " " << e.key << ": want " << e.want
            << ", got " << e.got << "\n";
      }
    }
    bool pass = r.all_expects_ok();
    out << "\nverdict " << (pass ? p.green : p.red) << (pass ? "pass" : "fail") << p.reset
        << "\n";
  }
}

}  // namespace

void write_run_report(std::ostream& out, const RunReport& report, ReportKind kind, bool color) {
  if (kind == ReportKind::Machine) {
    machine_run(out, report);
  } else {
    text_run(out, report, color);
  }
}

void write_sweep_report(std::ostream& out, const SweepReport& report, ReportKind kind,
                        bool color) {
  if (kind == ReportKind::Machine) {
    machine_sweep(out, report);
  } else {
    text_sweep(out, report, color);
  }
}

}  // namespace rvv
