#include "doctest.h"

#include <memory>
#include <string>
#include <vector>

#include "rvv/patterns/patterns.hpp"
#include "rvv/schedule/anomaly.hpp"
#include "rvv/schedule/executor.hpp"

using namespace rvv;

namespace {

const RowKey kAcc{"accounts", "acc"};

Store acc_store() {
  Store s;
  s.insert_row(kAcc, {{"balance", 1000}}, {StampKind::Counter, 0});
  return s;
}

ExecutionTrace run_scripted(const std::vector<std::unique_ptr<Program>>& programs,
                            Engine& engine, std::vector<std::size_t> script) {
  ScriptChooser chooser(std::move(script));
  ExecutionTrace t = execute_programs(programs, engine, chooser, ExecOptions{100000, true});
  REQUIRE(t.error.empty());
  return t;
}

std::int64_t final_balance(const ExecutionTrace& t) {
  return t.final_store.find(kAcc)->newest().columns.at("balance");
}

}  // namespace

TEST_CASE("capture_context reads in its own committed transaction") {
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());
  auto ctx = capture_context(e, kAcc, "balance");
  REQUIRE(ctx.ok());
  CHECK(ctx->key == kAcc);
  CHECK(ctx->column == "balance");
  CHECK(ctx->value == 1000);
  CHECK(ctx->stamp == VersionStamp{StampKind::Counter, 0});
  CHECK(ctx->version_seq == 0);
  CHECK(e.commit_seq() == 1);  // the capture transaction committed

  CHECK(capture_context(e, RowKey{"accounts", "nope"}, "balance").failed());

  // a held X lock blocks the capture read; the capture txn is given up
  auto w = e.begin(Isolation::ReadCommitted, CcMode::Lscc);
  REQUIRE(e.write(*w, kAcc, {ColumnUpdate::set("balance", 1)}).ok());
  CHECK(capture_context(e, kAcc, "balance").blocked());
}

TEST_CASE("a blind write-back alone applies its stale arithmetic") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new SplitBlindProgram("A", kAcc, "balance", -100, 0);
  programs.emplace_back(a);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 0, 0, 0});
  REQUIRE(t.steps.size() == 4);
  CHECK(t.steps[0].label == "rA1(acc)");
  CHECK(t.steps[0].result == "ok balance=1000 counter:0");
  CHECK(t.steps[1].label == "cA1");
  CHECK(t.steps[2].label == "wA2(acc)");
  CHECK(t.steps[2].result == "ok buffered balance=900");
  CHECK(t.steps[3].label == "cA2");

  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(a->outcome().written == 900);
  CHECK(a->outcome().attempts == 1);
  CHECK(final_balance(t) == 900);
}

TEST_CASE("a blind write-back over a concurrent update loses it") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new SplitBlindProgram("A", kAcc, "balance", -100, 0);
  auto* b = new SensitiveProgram("B", kAcc, "balance", -200, 1);
  programs.emplace_back(a);
  programs.emplace_back(b);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  // B's whole update lands between A's read phase and A's write phase
  ExecutionTrace t = run_scripted(programs, e, {0, 0, 1, 1, 0, 0});
  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(a->outcome().written == 900);
  CHECK(b->outcome().status == PatternStatus::Applied);
  CHECK(b->outcome().written == 800);
  CHECK(final_balance(t) == 900);  // B's -200 is gone

  AnomalyReport r = analyze(t);
  REQUIRE(r.lost_updates.size() == 1);
  CHECK(r.lost_updates[0].victim_name == "B");
  CHECK(r.lost_updates[0].overwriter_name == "A2");
}

TEST_CASE("a stamp-checked write-back detects the conflict instead") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new SplitConditionalProgram("A", kAcc, "balance", -100, 0);
  auto* b = new SensitiveProgram("B", kAcc, "balance", -200, 1);
  programs.emplace_back(a);
  programs.emplace_back(b);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 0, 1, 1, 0, 0});
  REQUIRE(t.steps.size() == 6);
  CHECK(t.steps[4].label == "wA2(acc,s)");
  CHECK(t.steps[4].result == "ok rows=0 checked=counter:1");
  CHECK_FALSE(t.steps[4].cond_applied);

  CHECK(a->outcome().status == PatternStatus::ConflictDetected);
  CHECK_FALSE(a->outcome().written.has_value());
  CHECK(final_balance(t) == 800);  // B's update survived
  CHECK(analyze(t).lost_updates.empty());
}

TEST_CASE("a stamp-checked write-back with no interference applies") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new SplitConditionalProgram("A", kAcc, "balance", -100, 0);
  programs.emplace_back(a);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 0, 0, 0});
  CHECK(t.steps[2].result == "ok rows=1 checked=counter:0");
  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(a->outcome().written == 900);
  CHECK(final_balance(t) == 900);
}

TEST_CASE("relative updates compose under every schedule") {
  auto factory = [] {
    std::vector<std::unique_ptr<Program>> out;
    out.push_back(std::make_unique<SensitiveProgram>("A", kAcc, "balance", -100, 0));
    out.push_back(std::make_unique<SensitiveProgram>("B", kAcc, "balance", -200, 1));
    return out;
  };

  std::size_t runs = 0;
  auto observer = [&](const std::vector<std::unique_ptr<Program>>& programs,
                      const ExecutionTrace& trace) {
    ++runs;
    CHECK(final_balance(trace) == 700);
    CHECK(detect_lost_updates(trace).empty());
    for (const auto& p : programs) {
      CHECK(static_cast<const PatternProgram*>(p.get())->outcome().status ==
            PatternStatus::Applied);
    }
  };
  Enumeration e = enumerate_schedules(factory, {CcMode::Lscc, StampKind::Counter},
                                      acc_store(), {}, observer);
  CHECK(e.error.empty());
  CHECK_FALSE(e.bound_exceeded);
  CHECK(runs == e.traces.size());
  CHECK(runs >= 3);
}

TEST_CASE("under first-writer-wins the second relative updater aborts") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new SensitiveProgram("A", kAcc, "balance", -100, 0);
  auto* b = new SensitiveProgram("B", kAcc, "balance", -200, 1);
  programs.emplace_back(a);
  programs.emplace_back(b);
  Engine e({CcMode::Mvcc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 1, 0});
  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(b->outcome().status == PatternStatus::AbortedSerialization);
  CHECK_FALSE(b->outcome().written.has_value());
  CHECK(final_balance(t) == 900);

  bool saw_conflict = false;
  for (const auto& s : t.steps) {
    if (s.error == Err::SerializationConflict) saw_conflict = true;
  }
  CHECK(saw_conflict);
}

TEST_CASE("reselect retries over a concurrent update and lands the right value") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new ReselectProgram("A", kAcc, "balance", -100, Isolation::RepeatableRead, 2, 0);
  auto* b = new SensitiveProgram("B", kAcc, "balance", -200, 1);
  programs.emplace_back(a);
  programs.emplace_back(b);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 0, 1, 1});
  REQUIRE(t.steps.size() == 10);
  CHECK(t.steps[4].label == "rA2(acc)");
  CHECK(t.steps[4].result == "ok balance=800 counter:1 stamp-mismatch");
  CHECK(t.steps[5].action == TraceStep::Action::Skip);  // wA2 of the dropped attempt
  CHECK(t.steps[6].action == TraceStep::Action::Skip);  // cA2 likewise
  CHECK(t.steps[7].label == "rA3(acc)");
  CHECK(t.steps[7].result == "ok balance=800 counter:1 stamp-ok");
  CHECK(t.steps[8].result == "ok buffered balance=700");

  CHECK(a->outcome().status == PatternStatus::RetriedApplied);
  CHECK(a->outcome().attempts == 2);
  CHECK(a->outcome().written == 700);
  REQUIRE(a->outcome().stamp_conflicts.size() == 1);
  CHECK(a->outcome().stamp_conflicts[0].first == VersionStamp{StampKind::Counter, 0});
  CHECK(a->outcome().stamp_conflicts[0].second == VersionStamp{StampKind::Counter, 1});
  CHECK(final_balance(t) == 700);
  CHECK(analyze(t).lost_updates.empty());
}

TEST_CASE("reselect with no budget stops at the first mismatch") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new ReselectProgram("A", kAcc, "balance", -100, Isolation::RepeatableRead, 0, 0);
  auto* b = new SensitiveProgram("B", kAcc, "balance", -200, 1);
  programs.emplace_back(a);
  programs.emplace_back(b);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 0, 1, 1});
  CHECK(a->outcome().status == PatternStatus::RetriesExhausted);
  CHECK(a->outcome().attempts == 1);
  CHECK_FALSE(a->outcome().written.has_value());
  CHECK(a->outcome().stamp_conflicts.size() == 1);
  CHECK(final_balance(t) == 800);
}

TEST_CASE("reselect without interference applies on the first attempt") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new ReselectProgram("A", kAcc, "balance", -100, Isolation::RepeatableRead, 2, 0);
  programs.emplace_back(a);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 0, 0, 0, 0});
  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(a->outcome().attempts == 1);
  CHECK(a->outcome().written == 900);
  CHECK(a->outcome().stamp_conflicts.empty());
  CHECK(final_balance(t) == 900);
}

TEST_CASE("two read-then-update flows deadlock and one survives") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new SelectUpdateProgram("A", kAcc, "balance", -100,
                                    Isolation::RepeatableRead, 0);
  auto* b = new SelectUpdateProgram("B", kAcc, "balance", -200,
                                    Isolation::RepeatableRead, 1);
  programs.emplace_back(a);
  programs.emplace_back(b);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  ExecutionTrace t = run_scripted(programs, e, {0, 1, 0, 1});
  bool saw_victim_step = false;
  for (const auto& s : t.steps) {
    if (s.action == TraceStep::Action::Deadlock) {
      saw_victim_step = true;
      CHECK(s.result == "victim=B");
    }
  }
  CHECK(saw_victim_step);
  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(a->outcome().written == 900);
  CHECK(b->outcome().status == PatternStatus::AbortedDeadlock);
  CHECK(final_balance(t) == 900);
}

TEST_CASE("a single read-then-update flow just applies") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new SelectUpdateProgram("A", kAcc, "balance", -100,
                                    Isolation::ReadCommitted, 0);
  programs.emplace_back(a);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());
  ExecutionTrace t = run_scripted(programs, e, {0, 0, 0});
  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(final_balance(t) == 900);
}

TEST_CASE("of two optimistic flows on one row only the first validator applies") {
  std::vector<std::unique_ptr<Program>> programs;
  auto* a = new OccUpdateProgram("A", kAcc, "balance", -100, 0);
  auto* b = new OccUpdateProgram("B", kAcc, "balance", -200, 1);
  programs.emplace_back(a);
  programs.emplace_back(b);
  Engine e({CcMode::Lscc, StampKind::Counter}, acc_store());

  // both read, then A validates, writes and commits before B validates
  ExecutionTrace t = run_scripted(programs, e, {0, 1, 0, 0, 0, 1});
  REQUIRE(t.steps.size() >= 6);
  CHECK(t.steps[2].label == "valA");
  CHECK(t.steps[2].result == "ok");
  CHECK(t.steps[5].label == "valB");
  CHECK(t.steps[5].result == "err=ValidationFailed");

  CHECK(a->outcome().status == PatternStatus::Applied);
  CHECK(a->outcome().written == 900);
  CHECK(b->outcome().status == PatternStatus::ConflictDetected);
  CHECK_FALSE(b->outcome().written.has_value());
  CHECK(final_balance(t) == 900);
}

TEST_CASE("pattern statuses print in report form") {
  CHECK(std::string(to_string(PatternStatus::Applied)) == "APPLIED");
  CHECK(std::string(to_string(PatternStatus::RetriedApplied)) == "RETRIED_APPLIED");
  CHECK(std::string(to_string(PatternStatus::ConflictDetected)) == "CONFLICT_DETECTED");
  CHECK(std::string(to_string(PatternStatus::AbortedDeadlock)) == "ABORTED_DEADLOCK");
  CHECK(std::string(to_string(PatternStatus::AbortedSerialization)) ==
        "ABORTED_SERIALIZATION");
  CHECK(std::string(to_string(PatternStatus::RetriesExhausted)) == "RETRIES_EXHAUSTED");
  CHECK(std::string(to_string(PatternStatus::Incomplete)) == "INCOMPLETE");
}
