#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pem/ir.hpp"

namespace pem {

using BlockId = std::uint32_t;

struct BasicBlock {
  CodeIndex begin = 0;  // first instruction
  CodeIndex end = 0;    // one past the last instruction
  std::vector<BlockId> successors;
  std::vector<BlockId> predecessors;
  /// Block ends in `jr`; its successors are not known statically.
  bool indirect = false;
};

/// Static control-flow graph. Blocks partition the instruction list.
struct Cfg {
  std::vector<BasicBlock> blocks;
  std::vector<BlockId> block_of;  // instruction index -> block
  BlockId entry = 0;

  std::size_t edge_count() const;
  /// Average number of distinct neighbours (predecessors plus successors).
  double connectivity() const;
  std::size_t conditional_branch_count(const Program& program) const;
};

Cfg static_cfg(const Program& program);

/// Immediate dominators over edges reachable from the entry. Unreachable
/// blocks (and the entry) map to themselves. Blocks reachable only through
/// indirect jumps are treated as extra roots.
std::vector<BlockId> immediate_dominators(const Cfg& cfg);
bool dominates(const std::vector<BlockId>& idom, BlockId a, BlockId b);

/// Bit r set when register r is read before being written on some path.
using RegisterSet = std::uint32_t;
constexpr RegisterSet register_bit(Register r) { return RegisterSet{1} << r.index(); }

/// Instruction-level successors. An indirect jump may reach any code address
/// loaded by `la`.
std::vector<std::vector<CodeIndex>> instruction_successors(const Program& program);
/// Registers live on entry to each instruction.
std::vector<RegisterSet> live_in(const Program& program);

}  // namespace pem
