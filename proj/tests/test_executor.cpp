#include "doctest.h"

#include <set>
#include <string>
#include <variant>

#include "rvv/schedule/executor.hpp"

using namespace rvv;

namespace {

const RowKey kX{"items", "x"};

Store items_store(StampKind kind = StampKind::Counter) {
  Store s;
  s.insert_row(kX, {{"val", 1000}}, {kind, 0});
  s.insert_row({"items", "y"}, {{"val", 500}}, {kind, 0});
  return s;
}

History hist(const std::string& text) {
  auto res = parse_history(text);
  REQUIRE(std::holds_alternative<History>(res));
  return std::get<History>(res);
}

std::int64_t final_val(const ExecutionTrace& t, const RowKey& key = kX) {
  const RowVersions* rv = t.final_store.find(key);
  REQUIRE(rv != nullptr);
  return rv->newest().columns.at("val");
}

const char* kTwoBlindWriters =
    "txn A delta=-100 write=blind\n"
    "txn B delta=-200 write=blind\n"
    "rA(x) rB(x) wA(x) wB(x) cA cB\n";

}  // namespace

TEST_CASE("written order replays the lock conflict with a retry") {
  ExecutionTrace t = execute_history(hist(kTwoBlindWriters), {CcMode::Lscc, StampKind::Counter},
                                     Isolation::ReadCommitted, {}, items_store());
  CHECK(t.error.empty());
  CHECK_FALSE(t.stuck);

  REQUIRE(t.steps.size() == 7);
  const char* labels[] = {"rA(x)", "rB(x)", "wA(x)", "wB(x)", "cA", "wB(x)", "cB"};
  for (std::size_t i = 0; i < 7; ++i) CHECK(t.steps[i].label == labels[i]);

  CHECK(t.steps[0].result == "ok val=1000 counter:0");
  CHECK(t.steps[0].read_version_seq == 0);
  CHECK(t.steps[2].result == "ok buffered val=900");

  // B's write meets A's X lock; the retry lands after A commits
  CHECK(t.steps[3].status == StepStatus::Blocked);
  CHECK(t.steps[3].result == "blocked");
  CHECK(t.steps[3].first_attempt);
  CHECK(t.steps[3].blocked_after == std::vector<std::string>{"B"});
  CHECK(t.steps[4].result == "ok commit=1");
  CHECK_FALSE(t.steps[5].first_attempt);
  CHECK(t.steps[5].result == "ok buffered val=800");
  CHECK(t.steps[6].result == "ok commit=2");

  CHECK(final_val(t) == 800);
  CHECK(t.choices.size() == 7);

  REQUIRE(t.txns.size() == 2);
  CHECK(t.txns[0].name == "A");
  CHECK(t.txns[0].state == TxnState::Committed);
  CHECK(t.txns[1].state == TxnState::Committed);
  CHECK(t.txns[0].observations.count(kX) == 1);
  CHECK(t.txns[1].last_write_step.at(kX) == 5);
}

TEST_CASE("trace serialization is one line per step with a digest") {
  ExecutionTrace t = execute_history(hist(kTwoBlindWriters), {CcMode::Lscc, StampKind::Counter},
                                     Isolation::ReadCommitted, {}, items_store());
  std::string s = t.serialize();
  const std::string first = "0|rA(x)|ok val=1000 counter:0|";
  REQUIRE(s.size() > first.size());
  CHECK(s.substr(0, first.size()) == first);

  std::size_t eol = s.find('\n');
  REQUIRE(eol != std::string::npos);
  std::string digest = s.substr(first.size(), eol - first.size());
  CHECK(digest.size() == 16);
  CHECK(digest.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 7);
}

TEST_CASE("repeatable read turns the same interleaving into a deadlock") {
  const char* text =
      "txn A iso=rr delta=-100 write=blind\n"
      "txn B iso=rr delta=-200 write=blind\n"
      "rA(x) rB(x) wA(x) wB(x) cA cB\n";
  ExecutionTrace t = execute_history(hist(text), {CcMode::Lscc, StampKind::Counter},
                                     Isolation::ReadCommitted, {}, items_store(),
                                     ExecOptions{100000, true});
  CHECK(t.error.empty());
  CHECK_FALSE(t.stuck);

  REQUIRE(t.steps.size() == 9);
  CHECK(t.steps[2].status == StepStatus::Blocked);  // wA waits on B's S lock
  CHECK(t.steps[3].status == StepStatus::Blocked);  // wB closes the cycle

  const TraceStep& dl = t.steps[4];
  CHECK(dl.action == TraceStep::Action::Deadlock);
  CHECK(dl.label == "deadlock");
  CHECK(dl.result == "victim=B");
  CHECK(dl.txn_name == "B");

  CHECK(t.steps[5].label == "wA(x)");
  CHECK(t.steps[5].result == "ok buffered val=900");
  CHECK_FALSE(t.steps[5].first_attempt);

  // the victim's parked write surfaces the abort, then its tail skips
  CHECK(t.steps[6].label == "wB(x)");
  CHECK(t.steps[6].status == StepStatus::Failed);
  CHECK(t.steps[6].error == Err::DeadlockVictim);
  CHECK(t.steps[6].result == "err=DeadlockVictim");
  CHECK(t.steps[7].label == "cB");
  CHECK(t.steps[7].action == TraceStep::Action::Skip);
  CHECK(t.steps[7].result == "skipped");
  CHECK(t.steps[8].result == "ok commit=1");

  CHECK(final_val(t) == 900);
  CHECK(t.txns[0].state == TxnState::Committed);
  CHECK(t.txns[1].state == TxnState::Aborted);
  CHECK(t.txns[1].abort_reason == Err::DeadlockVictim);
}

TEST_CASE("ticks run as their own scheduled step") {
  const char* text =
      "txn A delta=5\n"
      "wA(x) tick cA\n";
  ExecutionTrace t = execute_history(hist(text), {CcMode::Lscc, StampKind::CoarseTs},
                                     Isolation::ReadCommitted, {},
                                     items_store(StampKind::CoarseTs));
  CHECK(t.error.empty());
  REQUIRE(t.steps.size() == 3);
  CHECK(t.steps[0].result == "ok buffered val=1005");  // no prior read: sensitive add
  CHECK(t.steps[1].label == "tick");
  CHECK(t.steps[1].action == TraceStep::Action::Tick);
  CHECK(t.steps[1].result == "ok ticks=1");
  CHECK(t.steps[2].result == "ok commit=1");
  CHECK(t.final_store.find(kX)->newest().stamp == VersionStamp{StampKind::CoarseTs, 1});
}

TEST_CASE("optimistic programs commit themselves when the script ends early") {
  const char* text =
      "txn A mode=occ delta=-100 write=blind\n"
      "rA(x) valA wA(x)\n";
  ExecutionTrace t = execute_history(hist(text), {CcMode::Lscc, StampKind::Counter},
                                     Isolation::ReadCommitted, {}, items_store());
  CHECK(t.error.empty());
  REQUIRE(t.steps.size() == 4);
  CHECK(t.steps[1].label == "valA");
  CHECK(t.steps[1].result == "ok");
  CHECK(t.steps[3].label == "cA");
  CHECK(t.steps[3].result == "ok commit=1 implicit");
  CHECK(final_val(t) == 900);
}

TEST_CASE("a blocked waiter with no one to unblock it is reported as stuck") {
  const char* text =
      "txn A iso=rr\n"
      "rA(x) wB(x)\n";
  ExecutionTrace t = execute_history(hist(text), {CcMode::Lscc, StampKind::Counter},
                                     Isolation::ReadCommitted, {}, items_store());
  CHECK(t.error.empty());
  CHECK(t.stuck);
  REQUIRE(t.steps.size() == 2);
  CHECK(t.steps[1].status == StepStatus::Blocked);
  CHECK(t.txns[0].state == TxnState::Active);
  CHECK(t.txns[1].state == TxnState::Blocked);
}

TEST_CASE("enumeration covers every interleaving of independent programs") {
  History h = hist("rA(x) cA rB(y) cB");
  auto factory = [&] {
    return history_programs(h, Isolation::ReadCommitted, {}, CcMode::Lscc);
  };
  Enumeration e = enumerate_schedules(factory, {CcMode::Lscc, StampKind::Counter},
                                      items_store());
  CHECK(e.error.empty());
  CHECK_FALSE(e.bound_exceeded);
  CHECK(e.nominal_ops == 4);
  REQUIRE(e.traces.size() == 6);  // interleavings of two 2-op sequences

  std::set<std::string> seen;
  for (const auto& t : e.traces) {
    CHECK(t.error.empty());
    CHECK(t.steps.size() == 4);
    seen.insert(t.serialize());
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("enumeration refuses oversized inputs") {
  History h = hist("rA(x) wA(x) cA rB(x) wB(x) cB rC(x) wC(x) cC rD(x) wD(x) cD tick");
  auto factory = [&] {
    return history_programs(h, Isolation::ReadCommitted, {}, CcMode::Lscc);
  };
  Enumeration e = enumerate_schedules(factory, {CcMode::Lscc, StampKind::Counter},
                                      items_store());
  CHECK(e.bound_exceeded);
  CHECK(e.nominal_ops == 13);
  CHECK(e.traces.empty());
}

TEST_CASE("scripted choosers pin the schedule and abandon impossible scripts") {
  History h = hist("rA(x) cA rB(x) cB");
  Store init = items_store();

  {
    auto programs = history_programs(h, Isolation::ReadCommitted, {}, CcMode::Lscc);
    Engine engine({CcMode::Lscc, StampKind::Counter}, init);
    ScriptChooser chooser({1, 1, 0, 0});
    ExecutionTrace t = execute_programs(programs, engine, chooser);
    REQUIRE(t.steps.size() == 4);
    CHECK(t.steps[0].label == "rB(x)");
    CHECK(t.steps[1].label == "cB");
    CHECK(t.steps[2].label == "rA(x)");
    CHECK(t.error.empty());
  }
  {
    auto programs = history_programs(h, Isolation::ReadCommitted, {}, CcMode::Lscc);
    Engine engine({CcMode::Lscc, StampKind::Counter}, init);
    ScriptChooser chooser({0, 0, 0});  // third entry names a finished program
    ExecutionTrace t = execute_programs(programs, engine, chooser);
    CHECK(t.error == "scheduler abandoned the run");
    CHECK(t.steps.size() == 2);
  }
}

TEST_CASE("random sampling is reproducible per seed") {
  History h = hist(kTwoBlindWriters);
  auto factory = [&] {
    return history_programs(h, Isolation::ReadCommitted, {}, CcMode::Lscc);
  };
  EngineConfig cfg{CcMode::Lscc, StampKind::Counter};

  auto lines = [&](std::uint64_t seed) {
    std::vector<std::string> out;
    for (const auto& t : sample_schedules(factory, cfg, items_store(), seed, 20)) {
      out.push_back(t.serialize());
    }
    return out;
  };

  auto a = lines(42);
  auto b = lines(42);
  REQUIRE(a.size() == 20);
  CHECK(a == b);
  CHECK(std::set<std::string>(a.begin(), a.end()).size() > 1);
}

TEST_CASE("setup validation names the first unusable piece") {
  EngineConfig lscc{CcMode::Lscc, StampKind::Counter};
  EngineConfig mvcc{CcMode::Mvcc, StampKind::Counter};
  Store init = items_store();

  CHECK(validate_history_setup(hist("rA(x) cA"), lscc, Isolation::ReadCommitted, {}, init)
            .empty());

  CHECK(execute_history(hist("txn A mode=lscc\nrA(x) cA"), mvcc, Isolation::ReadCommitted,
                        {}, init)
            .error == "txn A is declared lscc but the engine runs mvcc");
  CHECK(execute_history(hist("txn A mode=mvcc\nrA(x) cA"), lscc, Isolation::ReadCommitted,
                        {}, init)
            .error == "txn A is declared mvcc but the engine runs lscc");
  CHECK(execute_history(hist("rA(nope) cA"), lscc, Isolation::ReadCommitted, {}, init)
            .error == "item nope: no row items/nope in the initial store");
  CHECK(execute_history(hist("txn A iso=snap\nrA(x) cA"), lscc, Isolation::ReadCommitted,
                        {}, init)
            .error == "txn A: isolation snap is not available under lscc");
  CHECK(execute_history(hist("txn A write=blind delta=-1\nwA(x) cA"), lscc,
                        Isolation::ReadCommitted, {}, init)
            .error == "txn A: blind write of x has no prior read");

  Store aux;
  aux.insert_row(kX, {{"aux", 1}}, {StampKind::Counter, 0});
  CHECK(execute_history(hist("rA(x) cA"), lscc, Isolation::ReadCommitted, {}, aux).error ==
        "item x: row items/x has no column val");

  // a failed setup yields no steps and leaves the store untouched
  ExecutionTrace t =
      execute_history(hist("rA(nope) cA"), lscc, Isolation::ReadCommitted, {}, init);
  CHECK(t.steps.empty());
  CHECK(store_digest(t.final_store) == store_digest(init));
}

TEST_CASE("bindings route items to explicit rows and columns") {
  ItemBindings b{{"x", ItemBinding{RowKey{"accounts", "acc"}, "balance"}}};
  Store s;
  s.insert_row({"accounts", "acc"}, {{"balance", 1000}}, {StampKind::Counter, 0});
  ExecutionTrace t = execute_history(hist("txn A delta=-50\nwA(x) cA"),
                                     {CcMode::Lscc, StampKind::Counter},
                                     Isolation::ReadCommitted, b, s);
  CHECK(t.error.empty());
  CHECK(t.steps[0].result == "ok buffered balance=950");
  CHECK(t.steps[0].key == RowKey{"accounts", "acc"});
}
