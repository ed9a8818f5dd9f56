#include "rvv/schedule/executor.hpp"

#include <algorithm>
#include <utility>

#include "rvv/schedule/program.hpp"
#include "rvv/schedule/trace.hpp"

namespace rvv {

const char* to_string(TraceStep::Action a) {
  switch (a) {
    case TraceStep::Action::None: return "none";
    case TraceStep::Action::Read: return "read";
    case TraceStep::Action::WriteBuf: return "write";
    case TraceStep::Action::CondWrite: return "cond-write";
    case TraceStep::Action::Validate: return "validate";
    case TraceStep::Action::Commit: return "commit";
    case TraceStep::Action::Abort: return "abort";
    case TraceStep::Action::Tick: return "tick";
    case TraceStep::Action::Deadlock: return "deadlock";
    case TraceStep::Action::Skip: return "skip";
  }
  return "?";
}

const TxnRecord* ExecutionTrace::find_txn(TxnId id) const {
  for (const auto& r : txns) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::string ExecutionTrace::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out += std::to_string(i);
    out += '|';
    out += steps[i].label;
    out += '|';
    out += steps[i].result;
    out += '|';
    out += steps[i].digest;
    out += '\n';
  }
  return out;
}

ItemBinding default_binding(const std::string& item) {
  return ItemBinding{RowKey{"items", item}, "val"};
}

// --- programs ---

HistoryTxnProgram::HistoryTxnProgram(TxnDecl decl, std::vector<Operation> ops,
                                     std::vector<std::size_t> priorities, ItemBindings bindings,
                                     Isolation default_iso, CcMode engine_mode)
    : Program(decl.name),
      decl_(std::move(decl)),
      ops_(std::move(ops)),
      priorities_(std::move(priorities)),
      bindings_(std::move(bindings)),
      iso_(decl_.iso.value_or(default_iso)),
      engine_mode_(engine_mode) {
  bool has_terminal = false;
  for (const auto& op : ops_) {
    if (op.kind == Operation::Kind::Commit || op.kind == Operation::Kind::Abort) {
      has_terminal = true;
    }
  }
  if (decl_.mode == TxnDecl::Mode::Occ && !has_terminal && !ops_.empty()) {
    // An optimistic transaction's write phase ends the transaction; a
    // script without an explicit terminal commits itself.
    implicit_from_ = ops_.size();
    Operation c;
    c.kind = Operation::Kind::Commit;
    c.txn = decl_.name;
    ops_.push_back(std::move(c));
    priorities_.push_back(priorities_.back() + 1);
  }
  for (const auto& op : ops_) {
    if (!op.item.empty() && bindings_.count(op.item) == 0) {
      bindings_[op.item] = default_binding(op.item);
    }
  }
}

std::size_t HistoryTxnProgram::next_priority() const { return priorities_[next_]; }

const ItemBinding& HistoryTxnProgram::binding(const std::string& item) const {
  return bindings_.at(item);
}

bool HistoryTxnProgram::write_is_blind(std::size_t op_index) const {
  if (decl_.style) return *decl_.style == TxnDecl::WriteStyle::Blind;
  const std::string& item = ops_[op_index].item;
  for (std::size_t i = 0; i < op_index; ++i) {
    if (ops_[i].kind == Operation::Kind::Read && ops_[i].item == item) return true;
  }
  return false;
}

std::vector<std::pair<TxnId, std::string>> HistoryTxnProgram::txn_names() const {
  if (txn_ == kNoTxn) return {};
  return {{txn_, name_}};
}

bool HistoryTxnProgram::drainable(const Engine& engine) const {
  if (done()) return false;
  if (dead_) return true;
  if (!began_ || parked_serial_.has_value()) return false;
  TxnState st = engine.txn_state(txn_);
  return st == TxnState::Committed || st == TxnState::Aborted;
}

TraceStep HistoryTxnProgram::step(Engine& engine) {
  const Operation& op = ops_[next_];
  TraceStep ts;
  ts.label = format_operation(op);
  ts.txn_name = name_;
  ts.txn = txn_;
  ts.first_attempt = !parked_serial_.has_value();

  auto skip = [&]() {
    ts.action = TraceStep::Action::Skip;
    ts.result = "skipped";
    ++next_;
    note_attempt(engine, StepStatus::Ok);
  };

  if (dead_) {
    skip();
    return ts;
  }

  if (!began_) {
    Result<TxnId> b = decl_.mode == TxnDecl::Mode::Occ ? engine.begin_occ()
                                                       : engine.begin(iso_, engine_mode_);
    if (!b.ok()) {
      dead_ = true;
      ts.status = StepStatus::Failed;
      ts.error = b.error;
      ts.result = std::string("err=") + to_string(b.error);
      ++next_;
      note_attempt(engine, StepStatus::Failed);
      return ts;
    }
    began_ = true;
    txn_ = b.value;
    ts.txn = txn_;
  } else {
    TxnState st = engine.txn_state(txn_);
    bool terminal = st == TxnState::Committed || st == TxnState::Aborted;
    if (terminal && !parked_serial_) {
      // The transaction ended underneath this program (abort op, failed
      // validation, self-commit); the rest of the script is moot.
      skip();
      return ts;
    }
    // terminal && parked: reissue the parked call so the engine can hand
    // back the abort reason as this step's failure.
  }

  auto finish = [&](StepStatus st, Err e) {
    ts.status = st;
    ts.error = e;
    if (st == StepStatus::Blocked) {
      ts.result = "blocked";
    } else {
      if (st == StepStatus::Failed) ts.result = std::string("err=") + to_string(e);
      ++next_;
    }
    note_attempt(engine, st);
  };

  std::int64_t delta = decl_.delta.value_or(0);

  switch (op.kind) {
    case Operation::Kind::Read: {
      const ItemBinding& b = binding(op.item);
      ts.action = TraceStep::Action::Read;
      ts.key = b.key;
      auto r = engine.read(txn_, b.key, b.column);
      finish(r.status, r.error);
      if (r.ok()) {
        last_read_[op.item] = ReadMemo{r.value.value, r.value.stamp};
        ts.read_version_seq = r.value.version_seq;
        ts.result = "ok " + b.column + "=" + std::to_string(r.value.value) + " " +
                    r.value.stamp.to_string();
      }
      break;
    }
    case Operation::Kind::Write: {
      const ItemBinding& b = binding(op.item);
      ts.action = TraceStep::Action::WriteBuf;
      ts.key = b.key;
      ColumnUpdates u;
      if (write_is_blind(next_)) {
        auto memo = last_read_.find(op.item);
        std::int64_t base = memo == last_read_.end() ? 0 : memo->second.value;
        u.push_back(ColumnUpdate::set(b.column, base + delta));
      } else {
        u.push_back(ColumnUpdate::add(b.column, delta));
      }
      auto r = engine.write(txn_, b.key, u);
      finish(r.status, r.error);
      if (r.ok()) {
        std::string cols;
        for (const auto& [col, val] : r.value.pending) {
          if (!cols.empty()) cols += ",";
          cols += col + "=" + std::to_string(val);
        }
        ts.result = "ok buffered " + cols;
      }
      break;
    }
    case Operation::Kind::CondWrite: {
      const ItemBinding& b = binding(op.item);
      ts.action = TraceStep::Action::CondWrite;
      ts.key = b.key;
      ReadMemo memo;  // parser guarantees a prior read; default memo never matches
      auto it = last_read_.find(op.item);
      if (it != last_read_.end()) memo = it->second;
      ColumnUpdates u{ColumnUpdate::set(b.column, memo.value + delta)};
      auto r = engine.conditional_write(txn_, b.key, u, memo.stamp);
      finish(r.status, r.error);
      if (r.ok()) {
        ts.cond_applied = r.value.rows_affected == 1;
        ts.result = "ok rows=" + std::to_string(r.value.rows_affected) +
                    " checked=" + r.value.current_stamp.to_string();
      }
      break;
    }
    case Operation::Kind::Validate: {
      ts.action = TraceStep::Action::Validate;
      auto r = engine.validate(txn_);
      finish(r.status, r.error);
      if (r.ok()) ts.result = "ok";
      break;
    }
    case Operation::Kind::Commit: {
      ts.action = TraceStep::Action::Commit;
      bool implicit = next_ == implicit_from_;
      auto r = engine.commit(txn_);
      finish(r.status, r.error);
      if (r.ok()) {
        ts.receipt = r.value;
        ts.result = "ok commit=" + std::to_string(r.value.commit_seq);
        if (implicit) ts.result += " implicit";
      }
      break;
    }
    case Operation::Kind::Abort: {
      ts.action = TraceStep::Action::Abort;
      auto r = engine.abort(txn_);
      finish(r.status, r.error);
      if (r.ok()) ts.result = "ok aborted";
      break;
    }
    case Operation::Kind::Tick:
      // ticks become TickPrograms, never transaction script entries
      skip();
      break;
  }
  return ts;
}

TickProgram::TickProgram(std::size_t priority) : Program("tick"), priority_(priority) {}

TraceStep TickProgram::step(Engine& engine) {
  engine.tick();
  done_ = true;
  TraceStep ts;
  ts.label = "tick";
  ts.action = TraceStep::Action::Tick;
  ts.result = "ok ticks=" + std::to_string(engine.clock_ticks());
  return ts;
}

// --- setup ---

namespace {

ItemBinding lookup_binding(const ItemBindings& bindings, const std::string& item) {
  auto it = bindings.find(item);
  return it == bindings.end() ? default_binding(item) : it->second;
}

}  // namespace

std::vector<std::unique_ptr<Program>> history_programs(const History& history,
                                                       Isolation default_iso,
                                                       const ItemBindings& bindings,
                                                       CcMode engine_mode) {
  struct Slice {
    std::vector<Operation> ops;
    std::vector<std::size_t> priorities;
  };
  std::map<std::string, Slice> slices;
  std::vector<std::string> order;
  std::vector<std::size_t> tick_positions;

  for (std::size_t i = 0; i < history.ops.size(); ++i) {
    const Operation& op = history.ops[i];
    if (op.kind == Operation::Kind::Tick) {
      tick_positions.push_back(i);
      continue;
    }
    if (slices.count(op.txn) == 0) order.push_back(op.txn);
    Slice& s = slices[op.txn];
    s.ops.push_back(op);
    s.priorities.push_back(i);
  }

  std::vector<std::unique_ptr<Program>> out;
  for (const std::string& name : order) {
    TxnDecl decl;
    auto it = history.txns.find(name);
    if (it != history.txns.end()) {
      decl = it->second;
    } else {
      decl.name = name;
    }
    Slice& s = slices[name];
    out.push_back(std::make_unique<HistoryTxnProgram>(std::move(decl), std::move(s.ops),
                                                      std::move(s.priorities), bindings,
                                                      default_iso, engine_mode));
  }
  for (std::size_t pos : tick_positions) {
    out.push_back(std::make_unique<TickProgram>(pos));
  }
  return out;
}

std::string validate_history_setup(const History& history, const EngineConfig& config,
                                   Isolation default_iso, const ItemBindings& bindings,
                                   const Store& initial) {
  for (const auto& [name, decl] : history.txns) {
    if (decl.mode == TxnDecl::Mode::Lscc && config.mode != CcMode::Lscc) {
      return "txn " + name + " is declared lscc but the engine runs mvcc";
    }
    if (decl.mode == TxnDecl::Mode::Mvcc && config.mode != CcMode::Mvcc) {
      return "txn " + name + " is declared mvcc but the engine runs lscc";
    }
    if (decl.mode != TxnDecl::Mode::Occ) {
      Isolation iso = decl.iso.value_or(default_iso);
      if (!isolation_valid_for(iso, config.mode)) {
        return std::string("txn ") + name + ": isolation " + to_string(iso) +
               " is not available under " + to_string(config.mode);
      }
    }
  }

  for (const auto& op : history.ops) {
    if (op.item.empty()) continue;
    ItemBinding b = lookup_binding(bindings, op.item);
    const RowVersions* row = initial.find(b.key);
    if (!row) {
      return "item " + op.item + ": no row " + b.key.table + "/" + b.key.id +
             " in the initial store";
    }
    if (row->newest().columns.count(b.column) == 0) {
      return "item " + op.item + ": row " + b.key.table + "/" + b.key.id +
             " has no column " + b.column;
    }
  }

  // A forced-blind write with nothing read is unresolvable.
  std::map<std::string, std::map<std::string, bool>> read_seen;
  for (const auto& op : history.ops) {
    if (op.kind == Operation::Kind::Read) {
      read_seen[op.txn][op.item] = true;
    } else if (op.kind == Operation::Kind::Write) {
      auto decl = history.txns.find(op.txn);
      bool forced_blind = decl != history.txns.end() && decl->second.style &&
                          *decl->second.style == TxnDecl::WriteStyle::Blind;
      if (forced_blind && !read_seen[op.txn][op.item]) {
        return "txn " + op.txn + ": blind write of " + op.item + " has no prior read";
      }
    }
  }
  return "";
}

// --- choosers ---

std::optional<std::size_t> HistoryOrderChooser::choose(
    const std::vector<std::size_t>& choosable,
    const std::vector<std::unique_ptr<Program>>& programs) {
  if (choosable.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < choosable.size(); ++i) {
    if (programs[choosable[i]]->next_priority() < programs[choosable[best]]->next_priority()) {
      best = i;
    }
  }
  return best;
}

ScriptChooser::ScriptChooser(std::vector<std::size_t> program_order)
    : script_(std::move(program_order)) {}

std::optional<std::size_t> ScriptChooser::choose(
    const std::vector<std::size_t>& choosable,
    const std::vector<std::unique_ptr<Program>>& programs) {
  if (pos_ < script_.size()) {
    std::size_t target = script_[pos_++];
    for (std::size_t i = 0; i < choosable.size(); ++i) {
      if (choosable[i] == target) return i;
    }
    return std::nullopt;
  }
  HistoryOrderChooser fallback;
  return fallback.choose(choosable, programs);
}

ReplayChooser::ReplayChooser(std::vector<std::size_t> prefix) : prefix_(std::move(prefix)) {}

std::optional<std::size_t> ReplayChooser::choose(
    const std::vector<std::size_t>& choosable,
    const std::vector<std::unique_ptr<Program>>& programs) {
  (void)programs;
  if (choosable.empty()) return std::nullopt;
  sizes_.push_back(choosable.size());
  if (pos_ < prefix_.size()) return prefix_[pos_++];
  return 0;
}

std::optional<std::size_t> RandomChooser::choose(
    const std::vector<std::size_t>& choosable,
    const std::vector<std::unique_ptr<Program>>& programs) {
  (void)programs;
  if (choosable.empty()) return std::nullopt;
  return static_cast<std::size_t>(rng_.next() % choosable.size());
}

// --- execution ---

namespace {

std::string display_name(const std::vector<std::unique_ptr<Program>>& programs, TxnId id) {
  for (const auto& p : programs) {
    for (const auto& [tid, name] : p->txn_names()) {
      if (tid == id) return name;
    }
  }
  return "txn" + std::to_string(id);
}

std::vector<std::string> blocked_names(const Engine& engine,
                                       const std::vector<std::unique_ptr<Program>>& programs) {
  std::vector<std::string> out;
  for (TxnId id : engine.blocked_txns()) out.push_back(display_name(programs, id));
  return out;
}

}  // namespace

ExecutionTrace execute_programs(const std::vector<std::unique_ptr<Program>>& programs,
                                Engine& engine, Chooser& chooser, const ExecOptions& options) {
  ExecutionTrace trace;
  std::map<TxnId, std::map<RowKey, std::size_t>> write_steps;

  auto push_step = [&](TraceStep ts) {
    ts.digest = store_digest(engine.store());
    ts.blocked_after = blocked_names(engine, programs);
    if (ts.status == StepStatus::Ok &&
        (ts.action == TraceStep::Action::WriteBuf ||
         (ts.action == TraceStep::Action::CondWrite && ts.cond_applied))) {
      write_steps[ts.txn][ts.key] = trace.steps.size();
    }
    trace.steps.push_back(std::move(ts));
    if (options.check_invariants_each_step) engine.check_invariants();
  };

  auto push_victim_step = [&](TxnId victim) {
    TraceStep d;
    d.label = "deadlock";
    d.txn = victim;
    d.txn_name = display_name(programs, victim);
    d.result = "victim=" + d.txn_name;
    d.action = TraceStep::Action::Deadlock;
    push_step(std::move(d));
  };

  auto drain = [&]() {
    bool again = true;
    while (again) {
      again = false;
      for (const auto& p : programs) {
        while (!p->done() && p->drainable(engine)) {
          push_step(p->step(engine));
          again = true;
        }
      }
    }
  };

  while (true) {
    drain();

    std::vector<std::size_t> choosable;
    bool all_done = true;
    for (std::size_t i = 0; i < programs.size(); ++i) {
      if (programs[i]->done()) continue;
      all_done = false;
      auto parked = programs[i]->parked_serial();
      if (!parked || *parked != engine.state_serial()) choosable.push_back(i);
    }
    if (all_done) break;

    if (choosable.empty()) {
      std::vector<TxnId> victims = engine.resolve_deadlocks();
      if (victims.empty()) {
        trace.stuck = true;
        break;
      }
      for (TxnId v : victims) push_victim_step(v);
      continue;
    }

    if (trace.steps.size() >= options.max_steps) {
      trace.error = "step limit exceeded";
      break;
    }

    std::optional<std::size_t> pick = chooser.choose(choosable, programs);
    if (!pick || *pick >= choosable.size()) {
      trace.error = "scheduler abandoned the run";
      break;
    }
    trace.choices.push_back(*pick);

    Program& p = *programs[choosable[*pick]];
    TraceStep ts = p.step(engine);
    bool blocked = ts.status == StepStatus::Blocked;
    push_step(std::move(ts));
    if (blocked) {
      for (TxnId v : engine.resolve_deadlocks()) push_victim_step(v);
    }
  }

  for (const auto& p : programs) {
    for (const auto& [tid, name] : p->txn_names()) {
      TxnRecord r;
      r.id = tid;
      r.name = name;
      r.state = engine.txn_state(tid);
      r.abort_reason = engine.txn_abort_reason(tid);
      r.observations = engine.observations(tid);
      auto ws = write_steps.find(tid);
      if (ws != write_steps.end()) r.last_write_step = ws->second;
      trace.txns.push_back(std::move(r));
    }
  }
  std::sort(trace.txns.begin(), trace.txns.end(),
            [](const TxnRecord& a, const TxnRecord& b) { return a.id < b.id; });
  trace.final_store = engine.store();
  return trace;
}

ExecutionTrace execute_history(const History& history, const EngineConfig& config,
                               Isolation default_iso, const ItemBindings& bindings,
                               const Store& initial, const ExecOptions& options) {
  std::string err = validate_history_setup(history, config, default_iso, bindings, initial);
  if (!err.empty()) {
    ExecutionTrace t;
    t.error = std::move(err);
    t.final_store = initial;
    return t;
  }
  Engine engine(config, initial);
  auto programs = history_programs(history, default_iso, bindings, config.mode);
  HistoryOrderChooser chooser;
  return execute_programs(programs, engine, chooser, options);
}

Enumeration enumerate_schedules(const ProgramFactory& factory, const EngineConfig& config,
                                const Store& initial, const EnumOptions& options,
                                const TraceObserver& observer) {
  Enumeration out;
  {
    auto probe = factory();
    if (probe.empty()) {
      out.error = "nothing to schedule";
      return out;
    }
    for (const auto& p : probe) out.nominal_ops += p->nominal_size();
  }
  if (out.nominal_ops > options.max_nominal_ops) {
    out.bound_exceeded = true;
    return out;
  }

  // Depth-first over choice sequences: replay a prefix, extend greedily with
  // position 0, then advance the deepest branch that still has alternatives.
  std::vector<std::size_t> prefix;
  while (true) {
    auto programs = factory();
    Engine engine(config, initial);
    ReplayChooser chooser(prefix);
    ExecutionTrace trace = execute_programs(programs, engine, chooser, options.exec);
    if (observer) observer(programs, trace);
    std::vector<std::size_t> choices = trace.choices;
    const std::vector<std::size_t>& sizes = chooser.decision_sizes();
    out.traces.push_back(std::move(trace));
    if (out.traces.size() > 200000) {
      out.error = "enumeration did not converge";
      return out;
    }

    std::size_t depth = choices.size();
    while (depth > 0 && choices[depth - 1] + 1 >= sizes[depth - 1]) --depth;
    if (depth == 0) break;
    prefix.assign(choices.begin(), choices.begin() + depth);
    prefix[depth - 1] += 1;
  }
  return out;
}

std::vector<ExecutionTrace> sample_schedules(const ProgramFactory& factory,
                                             const EngineConfig& config, const Store& initial,
                                             std::uint64_t seed, std::size_t count,
                                             const ExecOptions& options,
                                             const TraceObserver& observer) {
  std::vector<ExecutionTrace> out;
  SplitMix64 master(seed);
  for (std::size_t i = 0; i < count; ++i) {
    auto programs = factory();
    Engine engine(config, initial);
    RandomChooser chooser(master.next());
    ExecutionTrace trace = execute_programs(programs, engine, chooser, options);
    if (observer) observer(programs, trace);
    out.push_back(std::move(trace));
  }
  return out;
}

}  // namespace rvv
