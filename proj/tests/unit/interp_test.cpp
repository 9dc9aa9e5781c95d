#include <gtest/gtest.h>

#include <map>

#include "pem/corpusgen.hpp"
#include "pem/interp.hpp"
#include "pem/io.hpp"
#include "pem/pmm.hpp"
#include "pem/transform.hpp"

namespace pem {
namespace {

RunResult run(const std::string& text, Value seed, PathDescriptor path = {}, InterpConfig cfg = {},
              std::vector<TraceEvent>* trace = nullptr) {
  static std::vector<Program> keep;  // the interpreter borrows the program
  keep.push_back(parse(text));
  const Interpreter interp(keep.back(), cfg);
  return interp.run(std::make_shared<const PathDescriptor>(std::move(path)), seed, 99, trace);
}

std::size_t count_rule(const std::vector<TraceEvent>& trace, Rule r) {
  return static_cast<std::size_t>(
      std::count_if(trace.begin(), trace.end(), [&](const TraceEvent& e) { return e.rule == r; }));
}

const char* kBranch = R"(
main:
  cmp.eq r1, r0, r0
  jcc r1, yes
  li r2, 0x100000
  st [r2], r2
  done
yes:
  done
)";

TEST(Interpret, ImmediateThenDone) {
  const RunResult r = run("main:\n li r1, 5\n done\n", 7);
  EXPECT_EQ(r.terminated, Termination::Done);
  EXPECT_EQ(r.steps, 2u);
  EXPECT_TRUE(r.ov.empty());
  EXPECT_TRUE(r.predicates.empty());
}

TEST(Interpret, SelfComparisonIsTakenWithZeroSelectivity) {
  const RunResult r = run(kBranch, 7);
  ASSERT_EQ(r.predicates.size(), 1u);
  EXPECT_TRUE(r.predicates[0].outcome);
  EXPECT_EQ(r.predicates[0].selectivity, 0u);
  EXPECT_EQ(r.predicates[0].ic, 2u);
  EXPECT_EQ(r.steps, 3u);  // cmp, jcc, done at `yes`
}

TEST(Interpret, ForcedBranchOverridesCondition) {
  std::vector<TraceEvent> trace;
  PathDescriptor path;
  path.forced[2] = 2;  // fall through despite a true condition
  const RunResult r = run(kBranch, 7, path, {}, &trace);
  ASSERT_EQ(r.predicates.size(), 1u);
  EXPECT_FALSE(r.predicates[0].outcome);
  EXPECT_EQ(r.ov.count(ValueKind::MemVal, 0x100000), 1u);
  EXPECT_EQ(count_rule(trace, Rule::JccGT), 1u);
  EXPECT_EQ(count_rule(trace, Rule::JccT), 0u);
}

TEST(Interpret, EndlessLoopIsUnrolledTwentyTimes) {
  const char* text = R"(
main:
  li r1, 1
  li r2, 0x100000
loop:
  st [r2], r1
  jcc r1, loop
  done
)";
  std::vector<TraceEvent> trace;
  const RunResult r = run(text, 3, {}, {}, &trace);
  EXPECT_EQ(r.terminated, Termination::Done);
  EXPECT_EQ(count_rule(trace, Rule::JccT), 20u);
  EXPECT_EQ(count_rule(trace, Rule::JccF), 1u);
  ASSERT_EQ(r.predicates.size(), 21u);
  EXPECT_FALSE(r.predicates.back().flippable);
  EXPECT_EQ(r.ov.count(ValueKind::MemVal, 1), 21u);

  InterpConfig small;
  small.loop_unroll = 3;
  trace.clear();
  run(text, 3, {}, small, &trace);
  EXPECT_EQ(count_rule(trace, Rule::JccT), 3u);
}

TEST(Interpret, StartFillsRegistersAndUndefinedMemoryWithSeed) {
  const char* text = R"(
main:
  li r2, 0x100000
  st [r2], r5
  li r3, 0x100008
  ld r4, [r3]
  ld r6, [r2]
  done
)";
  std::vector<TraceEvent> trace;
  const RunResult r = run(text, 0x1234, {}, {}, &trace);
  EXPECT_EQ(r.ov.count(ValueKind::MemVal, 0x1234), 3u);  // stored r5, LdUd fill, read back
  EXPECT_EQ(count_rule(trace, Rule::LdUd), 1u);
  EXPECT_EQ(count_rule(trace, Rule::LdV), 1u);
  EXPECT_EQ(count_rule(trace, Rule::StV), 1u);
}

TEST(Interpret, InvalidLoadsGoThroughProbabilisticMemory) {
  const char* text = R"(
main:
  li r1, 0x5418
  ld r2, [r1]
  li r3, 0x10018
  st [r3], r1
  ld r4, [r1]
  done
)";
  InterpConfig cfg;
  cfg.mem_size = 128;
  std::vector<TraceEvent> trace;
  const RunResult r = run(text, 1, {}, cfg, &trace);
  const ProbabilisticMemory pm(128, 99);
  EXPECT_EQ(r.ov.count(ValueKind::MemVal, pm.initial(0x18)), 1u);
  // The store at 0x10018 aliases cell 0x18, so the second load sees it.
  EXPECT_EQ(r.ov.count(ValueKind::MemVal, 0x5418), 2u);
  EXPECT_EQ(count_rule(trace, Rule::LdIv), 2u);
  EXPECT_EQ(count_rule(trace, Rule::StIv), 1u);
  EXPECT_EQ(count_rule(trace, Rule::LogIvLd), 2u);
}

TEST(Interpret, MemoryModelsDifferOnInvalidAccesses) {
  // Store to 0x30, read it back, then read 0x38 (never written) and 0x10030,
  // which aliases 0x30 only modulo gamma.
  const char* text = R"(
main:
  li r1, 0x30
  st [r1], r1
  ld r2, [r1]
  li r3, 0x38
  ld r4, [r3]
  li r5, 0x10030
  ld r6, [r5]
  done
)";
  InterpConfig cfg;
  cfg.memory_model = MemoryModel::Constant;
  cfg.constant_fill = 5;
  const RunResult c = run(text, 1, {}, cfg);
  EXPECT_EQ(c.ov.count(ValueKind::MemVal, 0x30), 2u);  // written value read back
  EXPECT_EQ(c.ov.count(ValueKind::MemVal, 5), 2u);     // both unwritten reads
  cfg.memory_model = MemoryModel::None;
  const RunResult a = run(text, 1, {}, cfg);
  EXPECT_EQ(a.ov.count(ValueKind::MemVal, 0x30), 1u);  // only the store; the write was dropped
  EXPECT_EQ(a.ov, run(text, 1, {}, cfg).ov);
  cfg.memory_model = MemoryModel::Probabilistic;
  cfg.mem_size = 0x10000;
  EXPECT_EQ(run(text, 1, {}, cfg).ov.count(ValueKind::MemVal, 0x30), 3u);
}

TEST(Interpret, TerminationTags) {
  EXPECT_EQ(run("main:\n li r1, 0xdead\n jr r1\nend:\n la r2, end\n done\n", 1).terminated, Termination::InvalidJump);
  const RunResult jr = run("main:\n li r1, 0xdead\n jr r1\nend:\n la r2, end\n done\n", 1);
  EXPECT_EQ(jr.ov.count(ValueKind::JumpTarget, 0xdead), 1u);
  InterpConfig cfg;
  cfg.instr_budget = 10;
  const char* spin = "main:\n la r1, main\n jr r1\nend:\n la r2, end\n done\n";
  EXPECT_EQ(run(spin, 1, {}, cfg).terminated, Termination::InstructionBudget);
  EXPECT_EQ(run(spin, 1, {}, cfg).steps, 10u);
}

TEST(Interpret, ExternalCallLogsSymbolAndSetsR0) {
  const char* text = R"(
.extern memcpy
main:
  li r0, 3
  call memcpy
  li r1, 0x100000
  st [r1], r0
  done
)";
  const RunResult r = run(text, 77);
  EXPECT_EQ(r.ov.count(ValueKind::ExternSymbol, symbol_hash("memcpy")), 1u);
  EXPECT_EQ(r.ov.count(ValueKind::MemVal, 77), 1u);
}

TEST(Interpret, ConditionWithoutCompareUsesRegisterValue) {
  const RunResult r = run("main:\n li r1, 9\n jcc r1, out\nout:\n done\n", 1);
  ASSERT_EQ(r.predicates.size(), 1u);
  EXPECT_EQ(r.predicates[0].selectivity, 9u);
}

TEST(Interpret, SelectivityFollowsMoves) {
  const RunResult r = run("main:\n li r1, 173\n li r2, 0x20\n cmp.gt r3, r1, r2\n mov r4, r3\n jcc r4, out\nout:\n done\n", 1);
  ASSERT_EQ(r.predicates.size(), 1u);
  EXPECT_EQ(r.predicates[0].selectivity, 141u);
}

TEST(Interpret, BranchOutcomesOptionallyLogged) {
  InterpConfig cfg;
  cfg.log_branch_outcomes = true;
  std::vector<TraceEvent> trace;
  const RunResult r = run(kBranch, 7, {}, cfg, &trace);
  EXPECT_EQ(r.ov.count(ValueKind::PredicateSel, 1), 1u);
  EXPECT_EQ(replay_observations(trace), r.ov);
}

class GeneratedPrograms : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    CorpusSpec cs;
    cs.functions = 6;
    cs.family_size = 2;
    cs.gen.rng_seed = 21;
    corpus_ = new std::vector<Program>(generate_corpus(cs));
  }
  static void TearDownTestSuite() { delete corpus_; }
  static std::vector<Program>* corpus_;
};
std::vector<Program>* GeneratedPrograms::corpus_ = nullptr;

TEST_F(GeneratedPrograms, Deterministic) {
  for (const Program& p : *corpus_) {
    const Interpreter interp(p, {});
    const RunResult a = interp.run(nullptr, 42, 5);
    const RunResult b = interp.run(nullptr, 42, 5);
    EXPECT_EQ(a.ov, b.ov);
    EXPECT_EQ(a.steps, b.steps);
    EXPECT_EQ(a.covered_blocks, b.covered_blocks);
    ASSERT_EQ(a.predicates.size(), b.predicates.size());
  }
}

TEST_F(GeneratedPrograms, InstructionCountIsMonotone) {
  for (const Program& p : *corpus_) {
    std::vector<TraceEvent> trace;
    const Interpreter interp(p, {});
    const RunResult r = interp.run(nullptr, 7, 5, &trace);
    InstrCount last = 0;
    for (const TraceEvent& e : trace) {
      ASSERT_GE(e.ic, last);
      last = e.ic;
    }
    EXPECT_EQ(last, r.steps);
    for (std::size_t i = 1; i < r.predicates.size(); ++i) EXPECT_LT(r.predicates[i - 1].ic, r.predicates[i].ic);
  }
}

TEST_F(GeneratedPrograms, ForcedBranchesAreObeyed) {
  std::mt19937_64 rng(1);
  for (const Program& p : *corpus_) {
    const Interpreter interp(p, {});
    const RunResult seed_run = interp.run(nullptr, 7, 5);
    PathDescriptor path;
    for (const PredicateInstance& inst : seed_run.predicates)
      if (rng() % 4 == 0) {
        path = path.extended(inst.ic, inst.other_branch());
        break;
      }
    if (path.empty()) continue;
    std::vector<TraceEvent> trace;
    const RunResult r = interp.run(std::make_shared<const PathDescriptor>(path), 7, 5, &trace);
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
      auto it = path.forced.find(trace[i].ic);
      if (it == path.forced.end() || trace[i].rule != Rule::JccGT) continue;
      // The next instruction executed is the forced target.
      std::size_t j = i + 1;
      while (j < trace.size() && trace[j].ic == trace[i].ic) ++j;
      if (j < trace.size()) {
        EXPECT_EQ(trace[j].pc, it->second);
      }
    }
    EXPECT_GE(count_rule(trace, Rule::JccGT), 1u);
  }
}

TEST_F(GeneratedPrograms, TakenEdgesRespectUnrollBound) {
  for (const Program& p : *corpus_) {
    const Interpreter interp(p, {});
    for (Value seed : standard_seeds()) {
      const RunResult r = interp.run(nullptr, seed, 5);
      std::map<CodeIndex, std::size_t> taken;
      for (const PredicateInstance& inst : r.predicates)
        if (inst.outcome) ++taken[inst.predicate];
      for (const auto& [pc, n] : taken) EXPECT_LE(n, 20u);
      EXPECT_EQ(r.terminated, Termination::Done);
    }
  }
}

TEST_F(GeneratedPrograms, RenamingPreservesObservables) {
  std::mt19937_64 rng(9);
  for (const Program& p : *corpus_) {
    const Program q = rename_regs(p, rng).program;
    const Interpreter a(p, {});
    const Interpreter b(q, {});
    for (Value seed : {Value{1}, Value{0xdeadbeef}}) {
      const RunResult ra = a.run(nullptr, seed, 3);
      const RunResult rb = b.run(nullptr, seed, 3);
      EXPECT_EQ(ra.ov, rb.ov);
    }
  }
}

TEST_F(GeneratedPrograms, SeedPathCoversOnePath) {
  const Program& p = corpus_->front();
  const RunResult r = seed_path_run(p, 7, {}, 5);
  EXPECT_TRUE(r.path->empty());
  EXPECT_FALSE(r.covered_blocks.empty());
  EXPECT_LT(r.covered_blocks.size(), static_cfg(p).blocks.size());
  EXPECT_TRUE(std::is_sorted(r.covered_blocks.begin(), r.covered_blocks.end()));
}

TEST(RunJson, CarriesObservablesAndPredicates) {
  const RunResult r = run(kBranch, 7);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("terminated"), "done");
  ASSERT_EQ(j.at("predicates").size(), 1u);
  EXPECT_EQ(j.at("predicates")[0].at("selectivity"), "0x0");
  EXPECT_TRUE(j.at("ov").is_array());
}

TEST(Config, RejectsZeroes) {
  InterpConfig cfg;
  cfg.loop_unroll = 0;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
  cfg = {};
  cfg.mem_size = 0;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
}

}  // namespace
}  // namespace pem
