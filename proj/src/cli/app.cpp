#include "rvv/cli/app.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "rvv/cli/builtins.hpp"
#include "rvv/patterns/patterns.hpp"
#include "rvv/schedule/anomaly.hpp"
#include "rvv/schedule/executor.hpp"

namespace rvv {

namespace {

std::optional<std::int64_t> to_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return std::nullopt;
  for (std::size_t j = i; j < s.size(); ++j) {
    if (s[j] < '0' || s[j] > '9') return std::nullopt;
  }
  try {
    return std::stoll(s);
  } catch (...) {
    return std::nullopt;
  }
}

/// Literal match, or `>=N` / `<=N` numeric comparison for aggregate facts.
bool expect_matches(const std::string& want, const std::string& got) {
  if (want.size() > 2 && (want[0] == '>' || want[0] == '<') && want[1] == '=') {
    auto bound = to_int(want.substr(2));
    auto val = to_int(got);
    if (!bound || !val) return false;
    return want[0] == '>' ? *val >= *bound : *val <= *bound;
  }
  return want == got;
}

std::string run_fact(const Scenario& sc, const RunReport& rep, const std::string& key) {
  auto dot = key.find('.');
  std::string head = dot == std::string::npos ? key : key.substr(0, dot);
  std::string rest = dot == std::string::npos ? std::string() : key.substr(dot + 1);

  if ((head == "final" || head == "stamp") && !rest.empty()) {
    auto it = sc.items.find(rest);
    if (it == sc.items.end()) return "unbound-item";
    const RowVersions* row = rep.trace.final_store.find(it->second.key);
    if (!row) return "missing-row";
    if (head == "stamp") return row->newest().stamp.to_string();
    auto col = row->newest().columns.find(it->second.column);
    return col == row->newest().columns.end() ? "missing-column" : std::to_string(col->second);
  }
  if (key == "lost-updates") return std::to_string(rep.anomalies.lost_updates.size());
  if (key == "victim") {
    return rep.anomalies.lost_updates.empty() ? "-"
                                              : rep.anomalies.lost_updates.front().victim_name;
  }
  if (key == "overwriter") {
    return rep.anomalies.lost_updates.empty()
               ? "-"
               : rep.anomalies.lost_updates.front().overwriter_name;
  }
  if (key == "serializable") {
    return rep.anomalies.serializability.serializable ? "yes" : "no";
  }
  if (key == "steps") return std::to_string(rep.trace.steps.size());
  if (head == "outcome" || head == "written" || head == "attempts") {
    for (const auto& o : rep.outcomes) {
      if (o.name != rest) continue;
      if (head == "outcome") return to_string(o.status);
      if (head == "written") return o.written ? std::to_string(*o.written) : "-";
      return std::to_string(o.attempts);
    }
    return "unknown-program";
  }
  if (head == "state" && !rest.empty()) {
    for (const auto& t : rep.trace.txns) {
      if (t.name == rest) return to_string(t.state);
    }
    return "unknown-txn";
  }
  return "unknown-key";
}

/// Per-schedule item values joined `item=value,...`, items sorted.
std::string final_key(const Scenario& sc, const Store& store) {
  std::string out;
  for (const auto& [item, b] : sc.items) {
    const RowVersions* row = store.find(b.key);
    if (!row) continue;
    auto col = row->newest().columns.find(b.column);
    if (col == row->newest().columns.end()) continue;
    if (!out.empty()) out += ",";
    out += item + "=" + std::to_string(col->second);
  }
  return out;
}

std::string sweep_fact(const SweepReport& sr, const std::string& key) {
  if (key == "schedules") return std::to_string(sr.schedules);
  if (key == "lost-updates") return std::to_string(sr.with_lost_updates);
  if (key == "non-serializable") return std::to_string(sr.non_serializable);
  if (key == "final-states") return std::to_string(sr.final_counts.size());
  if (key.rfind("final.", 0) == 0) {
    std::string item = key.substr(6);
    std::set<std::string> values;
    for (const auto& [state, count] : sr.final_counts) {
      std::istringstream in(state);
      std::string pair;
      while (std::getline(in, pair, ',')) {
        auto eq = pair.find('=');
        if (eq != std::string::npos && pair.substr(0, eq) == item) {
          values.insert(pair.substr(eq + 1));
        }
      }
    }
    if (values.empty()) return "unbound-item";
    return values.size() == 1 ? *values.begin() : "mixed";
  }
  return "unknown-key";
}

/// Operation labels of the schedule in decision order: first attempts only,
/// skips and scheduler pseudo-steps left out.
std::string schedule_ops(const ExecutionTrace& t) {
  std::string out;
  for (const auto& s : t.steps) {
    if (!s.first_attempt) continue;
    if (s.action == TraceStep::Action::Skip || s.action == TraceStep::Action::Deadlock) continue;
    if (!out.empty()) out += " ";
    out += s.label;
  }
  return out;
}

std::string file_stem(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

}  // namespace

RunReport execute_scenario(const Scenario& sc, const RunOptions& opt) {
  RunReport rep;
  rep.scenario = sc.name;
  rep.config = sc.config;
  rep.default_iso = sc.default_iso;
  rep.seed = opt.seed;
  rep.trace.final_store = sc.initial;

  std::string verr = validate_scenario(sc);
  if (verr.empty() && sc.history) {
    verr = validate_history_setup(*sc.history, sc.config, sc.default_iso, sc.items, sc.initial);
  }
  if (!verr.empty()) {
    rep.trace.error = verr;
    return rep;
  }

  std::vector<std::unique_ptr<Program>> programs =
      sc.history ? history_programs(*sc.history, sc.default_iso, sc.items, sc.config.mode)
                 : make_pattern_programs(sc);

  std::unique_ptr<Chooser> chooser;
  if (sc.schedule.empty()) {
    chooser = std::make_unique<HistoryOrderChooser>();
  } else {
    std::vector<std::size_t> order;
    for (const auto& name : sc.schedule) {
      for (std::size_t i = 0; i < programs.size(); ++i) {
        if (programs[i]->name() == name) {
          order.push_back(i);
          break;
        }
      }
    }
    chooser = std::make_unique<ScriptChooser>(std::move(order));
  }

  Engine engine(sc.config, sc.initial);
  ExecOptions eo;
  eo.check_invariants_each_step = sc.check_invariants;
  rep.trace = execute_programs(programs, engine, *chooser, eo);
  rep.anomalies = analyze(rep.trace);

  for (const auto& p : programs) {
    if (const auto* pp = dynamic_cast<const PatternProgram*>(p.get())) {
      const PatternOutcome& o = pp->outcome();
      rep.outcomes.push_back(RunReport::Outcome{p->name(), o.status, o.written, o.attempts});
    }
  }

  for (const auto& [key, want] : sc.expects) {
    if (key.rfind("sweep.", 0) == 0) continue;  // sweep-mode expectation
    std::string got = run_fact(sc, rep, key);
    rep.expects.push_back(ExpectResult{key, want, got, expect_matches(want, got)});
  }
  return rep;
}

SweepReport execute_sweep(const Scenario& sc, const RunOptions& opt, std::string& error) {
  SweepReport sr;
  sr.scenario = sc.name;
  sr.config = sc.config;
  sr.default_iso = sc.default_iso;
  sr.seed = opt.seed;

  std::string verr = validate_scenario(sc);
  if (verr.empty() && sc.history) {
    verr = validate_history_setup(*sc.history, sc.config, sc.default_iso, sc.items, sc.initial);
  }
  if (!verr.empty()) {
    error = verr;
    return sr;
  }

  ProgramFactory factory = [&sc]() {
    return sc.history ? history_programs(*sc.history, sc.default_iso, sc.items, sc.config.mode)
                      : make_pattern_programs(sc);
  };

  std::map<std::string, std::size_t> finals;
  std::set<std::string> seen_signatures;
  std::size_t index = 0;
  TraceObserver observer = [&](const std::vector<std::unique_ptr<Program>>&,
                               const ExecutionTrace& t) {
    AnomalyReport an = analyze(t);
    ++finals[final_key(sc, t.final_store)];
    if (!an.lost_updates.empty()) {
      ++sr.with_lost_updates;
      for (const auto& lu : an.lost_updates) {
        std::string sig = "lost-update " + lu.key.to_string() + " victim=" + lu.victim_name +
                          " overwriter=" + lu.overwriter_name;
        if (seen_signatures.insert(sig).second) {
          sr.counterexamples.push_back(
              SweepReport::Counterexample{sig, index, schedule_ops(t)});
        }
      }
    }
    if (!an.serializability.serializable) {
      ++sr.non_serializable;
      if (seen_signatures.insert("non-serializable").second) {
        sr.counterexamples.push_back(
            SweepReport::Counterexample{"non-serializable", index, schedule_ops(t)});
      }
    }
    ++index;
  };

  ExecOptions eo;
  eo.check_invariants_each_step = sc.check_invariants;

  if (opt.limit > 0) {
    for (const auto& p : factory()) sr.nominal_ops += p->nominal_size();
    auto traces = sample_schedules(factory, sc.config, sc.initial, opt.seed,
                                   static_cast<std::size_t>(opt.limit), eo, observer);
    sr.sampled = true;
    sr.schedules = traces.size();
  } else {
    EnumOptions en;
    en.exec = eo;
    Enumeration e = enumerate_schedules(factory, sc.config, sc.initial, en, observer);
    sr.nominal_ops = e.nominal_ops;
    if (e.bound_exceeded) {
      error = "exhaustive sweep refused: " + std::to_string(e.nominal_ops) +
              " nominal operations exceed the bound of " + std::to_string(en.max_nominal_ops) +
              "; use --limit N to sample instead";
      return sr;
    }
    if (!e.error.empty()) {
      error = e.error;
      return sr;
    }
    sr.schedules = e.traces.size();
  }

  for (const auto& [state, count] : finals) sr.final_counts.emplace_back(state, count);

  for (const auto& [key, want] : sc.expects) {
    if (key.rfind("sweep.", 0) != 0) continue;
    std::string got = sweep_fact(sr, key.substr(6));
    sr.expects.push_back(ExpectResult{key, want, got, expect_matches(want, got)});
  }
  return sr;
}

namespace {

struct ParsedArgs {
  bool is_sweep = false;
  std::string target;
  std::optional<CcMode> engine;
  std::optional<StampKind> stamp;
  std::optional<Isolation> iso;
  RunOptions opts;
};

int load_and_run(const ParsedArgs& pa, std::ostream& out, std::ostream& err) {
  if (const Builtin* b = find_builtin(pa.target)) {
    if (!pa.is_sweep) return b->run(pa.opts, out);
    std::optional<Scenario> sc = b->sweep_scenario();
    if (!sc) {
      err << "error: builtin '" << pa.target << "' has no sweep form\n";
      return 2;
    }
    std::string sweep_err;
    SweepReport sr = execute_sweep(*sc, pa.opts, sweep_err);
    if (!sweep_err.empty()) {
      err << "error: " << sweep_err << "\n";
      return 2;
    }
    write_sweep_report(out, sr, pa.opts.report, pa.opts.color);
    return sr.expects.empty() || sr.all_expects_ok() ? 0 : 1;
  }

  std::error_code fs_ec;
  std::ifstream f(pa.target);
  // ifstream opens directories on some platforms; rule them out explicitly.
  if (!f || !std::filesystem::is_regular_file(pa.target, fs_ec)) {
    err << "error: cannot open '" << pa.target << "' (not a file or builtin; see --help)\n";
    return 2;
  }
  std::stringstream buf;
  buf << f.rdbuf();
  std::string text = buf.str();

  auto parsed = looks_like_scenario(text) ? parse_scenario_text(text)
                                          : scenario_from_history_text(text, file_stem(pa.target));
  if (const auto* e = std::get_if<ScenarioError>(&parsed)) {
    err << pa.target << ":" << e->line << ":" << e->column << ": error: " << e->message << "\n";
    return 2;
  }
  Scenario sc = std::get<Scenario>(std::move(parsed));

  if (pa.engine) sc.config.mode = *pa.engine;
  if (pa.stamp) sc.config.stamp = *pa.stamp;
  if (pa.iso) sc.default_iso = *pa.iso;
  materialize_rows(sc);
  seed_default_rows(sc);

  if (pa.is_sweep) {
    std::string sweep_err;
    SweepReport sr = execute_sweep(sc, pa.opts, sweep_err);
    if (!sweep_err.empty()) {
      err << "error: " << sweep_err << "\n";
      return 2;
    }
    write_sweep_report(out, sr, pa.opts.report, pa.opts.color);
    return sr.expects.empty() || sr.all_expects_ok() ? 0 : 1;
  }

  RunReport rep = execute_scenario(sc, pa.opts);
  if (!rep.trace.error.empty()) {
    err << "error: " << rep.trace.error << "\n";
    return 2;
  }
  write_run_report(out, rep, pa.opts.report, pa.opts.color);
  return rep.expects.empty() || rep.all_expects_ok() ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lost-update simulator: transactional row store, access patterns, "
               "schedule exploration"};
  app.require_subcommand(1);

  std::string engine_s, stamp_s, iso_s, report_s = "text";
  std::uint64_t limit = 0;
  std::uint64_t seed = 0;

  app.add_option("--engine", engine_s, "concurrency control: lscc or mvcc")
      ->check(CLI::IsMember({"lscc", "mvcc"}));
  app.add_option("--stamp", stamp_s, "row stamping: counter, coarse or scn")
      ->check(CLI::IsMember({"counter", "coarse", "scn"}));
  app.add_option("--iso", iso_s, "default isolation: rc, rr, snap or ser")
      ->check(CLI::IsMember({"rc", "rr", "snap", "ser"}));
  app.add_option("--limit", limit, "sweep: sample N random schedules instead of exhausting");
  app.add_option("--report", report_s, "report style")
      ->check(CLI::IsMember({"text", "machine"}));
  app.add_option("--seed", seed, "seed for sampled schedules");

  std::string run_target, sweep_target;
  CLI::App* cmd_run = app.add_subcommand("run", "execute a scenario file, history file or "
                                                "builtin once and report");
  cmd_run->add_option("target", run_target, "file path or builtin name")->required();
  cmd_run->fallthrough();
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "explore schedules of a scenario and "
                                                    "aggregate anomalies");
  cmd_sweep->add_option("target", sweep_target, "file path or builtin name")->required();
  cmd_sweep->fallthrough();

  std::string builtin_list;
  for (const auto& b : builtins()) {
    builtin_list += "  " + b.name + "\n      " + b.summary + "\n";
  }
  app.footer("builtins:\n" + builtin_list +
             "Environment: RVV_NO_COLOR disables ANSI styling in text reports.");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "usage: rvvsim run|sweep <file|builtin> [--engine ...] [--stamp ...] [--iso ...] "
           "[--limit N] [--report text|machine] [--seed N]\n";
    return 2;
  }

  ParsedArgs pa;
  pa.is_sweep = cmd_sweep->parsed();
  pa.target = pa.is_sweep ? sweep_target : run_target;
  if (!engine_s.empty()) pa.engine = cc_mode_from_string(engine_s);
  if (!stamp_s.empty()) pa.stamp = stamp_kind_from_string(stamp_s);
  if (!iso_s.empty()) pa.iso = isolation_from_string(iso_s);
  pa.opts.report = report_s == "machine" ? ReportKind::Machine : ReportKind::Text;
  pa.opts.color = pa.opts.report == ReportKind::Text && std::getenv("RVV_NO_COLOR") == nullptr;
  pa.opts.limit = limit;
  pa.opts.seed = seed;

  return load_and_run(pa, out, err);
}

}  // namespace rvv
