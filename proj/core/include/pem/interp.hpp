#pragma once

// Forced-path interpreter over the toy IR.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string_view>
#include <vector>

#include "pem/cfg.hpp"
#include "pem/ir.hpp"
#include "pem/observable.hpp"

namespace pem {

using InstrCount = std::uint64_t;

/// How loads/stores to invalid addresses are handled.
enum class MemoryModel : std::uint8_t {
  Probabilistic,  // PM[a mod gamma]
  Constant,       // writes are kept per exact address; unwritten reads return a constant
  None,           // reads return unsynchronized random values, writes are dropped
};

std::string_view to_string(MemoryModel m);
MemoryModel memory_model_from_string(std::string_view name);

struct InterpConfig {
  std::size_t loop_unroll = 20;
  std::size_t instr_budget = 50'000;
  std::size_t string_len = 20;
  std::size_t pred_instance_flips = 1;
  std::size_t mem_size = 65'536;  // gamma
  MemoryModel memory_model = MemoryModel::Probabilistic;
  Value constant_fill = 0;
  /// Also log jcc outcomes (0/1) as predicate values.
  bool log_branch_outcomes = false;
  /// Valid data memory: [data_base, data_base + data_size).
  Addr data_base = 0x100000;
  std::size_t data_size = 65'536;

  void check() const;
};

/// Instruction count -> forced branch target.
struct PathDescriptor {
  std::map<InstrCount, CodeIndex> forced;

  bool empty() const { return forced.empty(); }
  std::size_t edges_off() const { return forced.size(); }
  InstrCount last_ic() const { return forced.empty() ? 0 : forced.rbegin()->first; }
  PathDescriptor extended(InstrCount ic, CodeIndex target) const;
  friend bool operator==(const PathDescriptor&, const PathDescriptor&) = default;
};

using PathPtr = std::shared_ptr<const PathDescriptor>;

struct PredicateInstance {
  PathPtr path;   // descriptor of the run that observed it
  InstrCount ic = 0;
  CodeIndex predicate = 0;   // index of the jcc
  Value selectivity = 0;
  bool outcome = false;      // true when the taken edge was followed
  CodeIndex taken = 0;       // jcc target
  CodeIndex fallthrough = 0;
  /// False when flipping would exceed the loop-unroll bound.
  bool flippable = true;

  CodeIndex other_branch() const { return outcome ? fallthrough : taken; }
};

enum class Termination : std::uint8_t { Done, InstructionBudget, InvalidJump };
std::string_view to_string(Termination t);

struct RunResult {
  ObservableValues ov;
  std::vector<PredicateInstance> predicates;
  std::vector<BlockId> covered_blocks;  // sorted, unique
  Termination terminated = Termination::Done;
  InstrCount steps = 0;
  PathPtr path;
};

/// Rule applications recorded by an optional trace sink.
enum class Rule : std::uint8_t {
  Start, JccGT, JccT, JccF, LdV, LdUd, LdIv, StV, StIv, Jmp, Jr, CallExt, Done,
  LogLd, LogIvLd, LogSt, LogJN, LogJR, LogCC,
};
std::string_view to_string(Rule r);

struct TraceEvent {
  InstrCount ic = 0;
  CodeIndex pc = 0;
  Rule rule = Rule::Start;
  /// Observations made by a logging rule.
  std::vector<ValueKey> logged;
};

class Interpreter {
 public:
  Interpreter(const Program& program, InterpConfig config);

  RunResult run(const PathPtr& path, Value seed, std::uint64_t pm_seed,
                std::vector<TraceEvent>* trace = nullptr) const;

  const Program& program() const { return *program_; }
  const Cfg& cfg() const { return cfg_; }
  const InterpConfig& config() const { return config_; }
  bool valid_address(Addr a) const {
    return a >= config_.data_base && a - config_.data_base < config_.data_size;
  }

 private:
  const Program* program_;
  InterpConfig config_;
  Cfg cfg_;
  std::vector<std::uint64_t> symbol_hashes_;
  std::uint64_t fingerprint_ = 0;
};

RunResult interpret(const Program& program, const PathDescriptor& path, Value seed,
                    const InterpConfig& config, std::uint64_t pm_seed);
RunResult seed_path_run(const Program& program, Value seed, const InterpConfig& config,
                        std::uint64_t pm_seed);

/// Fixed seed values shared by every program of an experiment.
const std::vector<Value>& standard_seeds();

/// Rebuilds the observable values of a run from its trace.
ObservableValues replay_observations(const std::vector<TraceEvent>& trace);

}  // namespace pem
