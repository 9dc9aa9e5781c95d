#include "pem/interp.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "pem/pmm.hpp"

namespace pem {

std::string_view to_string(MemoryModel m) {
  switch (m) {
    case MemoryModel::Probabilistic: return "pmm";
    case MemoryModel::Constant: return "const";
    case MemoryModel::None: return "nomem";
  }
  return "?";
}

MemoryModel memory_model_from_string(std::string_view name) {
  if (name == "pmm") return MemoryModel::Probabilistic;
  if (name == "const") return MemoryModel::Constant;
  if (name == "nomem") return MemoryModel::None;
  throw std::invalid_argument("unknown memory model '" + std::string(name) + "'");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Done: return "done";
    case Termination::InstructionBudget: return "instruction-budget";
    case Termination::InvalidJump: return "invalid-jump";
  }
  return "?";
}

std::string_view to_string(Rule r) {
  static constexpr std::array<std::string_view, 19> names = {
      "Start", "JccGT", "JccT", "JccF", "LdV", "LdUd", "LdIv", "StV", "StIv", "Jmp",
      "Jr", "CallExt", "Done", "LogLd", "LogIvLd", "LogSt", "LogJN", "LogJR", "LogCC"};
  return names[static_cast<std::size_t>(r)];
}

void InterpConfig::check() const {
  if (loop_unroll == 0 || instr_budget == 0 || string_len == 0 || pred_instance_flips == 0 ||
      mem_size == 0 || data_size == 0)
    throw std::invalid_argument("interpreter configuration values must be positive");
}

PathDescriptor PathDescriptor::extended(InstrCount ic, CodeIndex target) const {
  PathDescriptor next = *this;
  next.forced[ic] = target;
  return next;
}

Interpreter::Interpreter(const Program& program, InterpConfig config)
    : program_(&program), config_(config), cfg_(static_cfg(program)) {
  config_.check();
  validate(program);
  symbol_hashes_.reserve(program.symbols.size());
  for (const std::string& s : program.symbols) symbol_hashes_.push_back(symbol_hash(s));
  std::uint64_t h = 0x51ed270b27f5a3c1ULL;
  for (const Instruction& ins : program.code) {
    h = mix64(h ^ (static_cast<std::uint64_t>(ins.op) << 56 | static_cast<std::uint64_t>(ins.dst.index()) << 48 |
                   static_cast<std::uint64_t>(ins.lhs.index()) << 40 |
                   static_cast<std::uint64_t>(ins.rhs.index()) << 32 |
                   static_cast<std::uint64_t>(ins.cmp) << 24 | static_cast<std::uint64_t>(ins.bin) << 16));
    h = mix64(h ^ ins.imm);
  }
  fingerprint_ = h;
}

namespace {

std::uint64_t path_hash(const PathDescriptor& path) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (const auto& [ic, target] : path.forced) h = mix64(h ^ mix64(ic) ^ (target * 0x9e3779b97f4a7c15ULL));
  return h;
}

}  // namespace

RunResult Interpreter::run(const PathPtr& path_ptr, Value seed, std::uint64_t pm_seed,
                           std::vector<TraceEvent>* trace) const {
  static const PathPtr kEmpty = std::make_shared<const PathDescriptor>();
  const PathPtr path = path_ptr ? path_ptr : kEmpty;
  const Program& prog = *program_;
  const std::size_t n = prog.size();

  RunResult result;
  result.path = path;

  std::array<Value, Register::kCount> regs;
  regs.fill(seed);
  // Selectivity of the comparison that produced each register, if any.
  std::array<std::optional<Value>, Register::kCount> provenance{};
  std::unordered_map<Addr, Value> memory;
  ProbabilisticMemory pm(config_.mem_size, pm_seed);
  std::unordered_map<Addr, Value> invalid_written;  // Constant model only
  std::uint64_t noise = mix64(fingerprint_ ^ mix64(seed) ^ path_hash(*path) ^ pm_seed);
  std::vector<std::uint32_t> taken_count(n, 0);
  std::vector<char> covered(cfg_.blocks.size(), 0);

  auto event = [&](InstrCount ic, CodeIndex pc, Rule rule, std::vector<ValueKey> logged = {}) {
    if (trace) trace->push_back({ic, pc, rule, std::move(logged)});
  };
  event(0, prog.entry, Rule::Start);

  CodeIndex pc = prog.entry;
  InstrCount ic = 1;
  const auto& forced = path->forced;
  auto next_forced = forced.begin();
  result.terminated = Termination::InstructionBudget;

  for (std::size_t step = 0; step < config_.instr_budget; ++step, ++ic) {
    const Instruction& ins = prog.code[pc];
    covered[cfg_.block_of[pc]] = 1;
    result.steps = ic;
    CodeIndex next = pc + 1;
    bool stop = false;

    switch (ins.op) {
      case Opcode::Mov:
        regs[ins.dst.index()] = regs[ins.lhs.index()];
        provenance[ins.dst.index()] = provenance[ins.lhs.index()];
        break;
      case Opcode::LoadImm:
        regs[ins.dst.index()] = ins.imm;
        provenance[ins.dst.index()].reset();
        break;
      case Opcode::Arith:
        regs[ins.dst.index()] = evaluate(ins.bin, regs[ins.lhs.index()], regs[ins.rhs.index()]);
        provenance[ins.dst.index()].reset();
        break;
      case Opcode::Compare: {
        const Value a = regs[ins.lhs.index()];
        const Value b = regs[ins.rhs.index()];
        const Value sel = log_compare(result.ov, ins.cmp, a, b);
        event(ic, pc, Rule::LogCC, {{ValueKind::PredicateSel, sel}});
        regs[ins.dst.index()] = evaluate(ins.cmp, a, b) ? 1 : 0;
        provenance[ins.dst.index()] = sel;
        break;
      }
      case Opcode::Load: {
        const Addr a = regs[ins.lhs.index()];
        Value v = 0;
        Rule exec = Rule::LdV;
        if (valid_address(a)) {
          auto [it, inserted] = memory.try_emplace(a, seed);
          v = it->second;
          exec = inserted ? Rule::LdUd : Rule::LdV;
        } else {
          exec = Rule::LdIv;
          switch (config_.memory_model) {
            case MemoryModel::Probabilistic: v = invalid_load(pm, a); break;
            case MemoryModel::Constant: {
              const auto it = invalid_written.find(a);
              v = it == invalid_written.end() ? config_.constant_fill : it->second;
              break;
            }
            case MemoryModel::None:
              noise = mix64(noise);
              v = noise;
              break;
          }
        }
        log_load(result.ov, a, v);
        event(ic, pc, exec == Rule::LdIv ? Rule::LogIvLd : Rule::LogLd,
              {{ValueKind::MemAddr, a}, {ValueKind::MemVal, v}});
        event(ic, pc, exec);
        regs[ins.dst.index()] = v;
        provenance[ins.dst.index()].reset();
        break;
      }
      case Opcode::Store: {
        const Addr a = regs[ins.lhs.index()];
        const Value v = regs[ins.rhs.index()];
        log_store(result.ov, a, v, ins.string_store);
        event(ic, pc, Rule::LogSt,
              {{ValueKind::MemAddr, a}, {ins.string_store ? ValueKind::MemString : ValueKind::MemVal, v}});
        if (valid_address(a)) {
          memory[a] = v;
          event(ic, pc, Rule::StV);
        } else {
          if (config_.memory_model == MemoryModel::Probabilistic) invalid_store(pm, a, v);
          else if (config_.memory_model == MemoryModel::Constant) invalid_written[a] = v;
          event(ic, pc, Rule::StIv);
        }
        break;
      }
      case Opcode::Jmp:
        log_jump(result.ov, ins.imm);
        event(ic, pc, Rule::LogJN, {{ValueKind::JumpTarget, ins.imm}});
        event(ic, pc, Rule::Jmp);
        next = ins.imm;
        break;
      case Opcode::Jcc: {
        const Value cond = regs[ins.lhs.index()];
        const auto& prov = provenance[ins.lhs.index()];
        PredicateInstance inst;
        inst.path = path;
        inst.ic = ic;
        inst.predicate = pc;
        inst.selectivity = prov ? *prov : cond;
        inst.taken = ins.imm;
        inst.fallthrough = pc + 1;
        while (next_forced != forced.end() && next_forced->first < ic) ++next_forced;
        Rule rule = Rule::JccF;
        if (next_forced != forced.end() && next_forced->first == ic) {
          next = next_forced->second;
          rule = Rule::JccGT;
        } else if (cond != 0 && taken_count[pc] < config_.loop_unroll) {
          next = inst.taken;
          rule = Rule::JccT;
        } else {
          next = inst.fallthrough;
        }
        inst.outcome = next == inst.taken && !(inst.taken == inst.fallthrough && cond == 0);
        if (inst.outcome) ++taken_count[pc];
        else if (taken_count[pc] >= config_.loop_unroll) inst.flippable = false;
        if (config_.log_branch_outcomes) {
          const Value out = inst.outcome ? 1 : 0;
          result.ov.add(ValueKind::PredicateSel, out);
          event(ic, pc, rule, {{ValueKind::PredicateSel, out}});
        } else {
          event(ic, pc, rule);
        }
        result.predicates.push_back(std::move(inst));
        if (next >= n) {
          result.terminated = Termination::InvalidJump;
          stop = true;
        }
        break;
      }
      case Opcode::Jr: {
        const Value t = regs[ins.lhs.index()];
        log_jump(result.ov, t);
        event(ic, pc, Rule::LogJR, {{ValueKind::JumpTarget, t}});
        event(ic, pc, Rule::Jr);
        if (t >= n) {
          result.terminated = Termination::InvalidJump;
          stop = true;
        } else {
          next = static_cast<CodeIndex>(t);
        }
        break;
      }
      case Opcode::CallExt:
        result.ov.add(ValueKind::ExternSymbol, symbol_hashes_[ins.imm]);
        event(ic, pc, Rule::CallExt, {{ValueKind::ExternSymbol, symbol_hashes_[ins.imm]}});
        regs[0] = seed;
        provenance[0].reset();
        break;
      case Opcode::Done:
        event(ic, pc, Rule::Done);
        result.terminated = Termination::Done;
        stop = true;
        break;
    }
    if (stop) break;
    pc = next;
  }

  for (BlockId b = 0; b < covered.size(); ++b)
    if (covered[b]) result.covered_blocks.push_back(b);
  return result;
}

RunResult interpret(const Program& program, const PathDescriptor& path, Value seed,
                    const InterpConfig& config, std::uint64_t pm_seed) {
  const Interpreter interp(program, config);
  return interp.run(std::make_shared<const PathDescriptor>(path), seed, pm_seed);
}

RunResult seed_path_run(const Program& program, Value seed, const InterpConfig& config,
                        std::uint64_t pm_seed) {
  return interpret(program, PathDescriptor{}, seed, config, pm_seed);
}

const std::vector<Value>& standard_seeds() {
  static const std::vector<Value> seeds = {
      0x1,      0x7,        0x2a,       0x3e8,      0x100040,
      0xdeadbeef, 0x7fffffff, 0x123456789abcdef0ULL, 0xfedcba9876543210ULL, 0x8000000000000001ULL};
  return seeds;
}

ObservableValues replay_observations(const std::vector<TraceEvent>& trace) {
  ObservableValues ov;
  for (const TraceEvent& e : trace)
    for (const ValueKey& k : e.logged) ov.add(k.kind, k.value);
  return ov;
}

}  // namespace pem
