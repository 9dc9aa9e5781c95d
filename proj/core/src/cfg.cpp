#include "pem/cfg.hpp"

#include <algorithm>
#include <set>

namespace pem {

std::size_t Cfg::edge_count() const {
  std::size_t n = 0;
  for (const BasicBlock& b : blocks) n += b.successors.size();
  return n;
}

double Cfg::connectivity() const {
  if (blocks.empty()) return 0.0;
  std::size_t total = 0;
  for (BlockId id = 0; id < blocks.size(); ++id) {
    std::set<BlockId> neighbours(blocks[id].successors.begin(), blocks[id].successors.end());
    neighbours.insert(blocks[id].predecessors.begin(), blocks[id].predecessors.end());
    neighbours.erase(id);
    total += neighbours.size();
  }
  return static_cast<double>(total) / static_cast<double>(blocks.size());
}

std::size_t Cfg::conditional_branch_count(const Program& program) const {
  return static_cast<std::size_t>(std::count_if(program.code.begin(), program.code.end(),
                                                [](const Instruction& i) { return i.op == Opcode::Jcc; }));
}

Cfg static_cfg(const Program& program) {
  const std::size_t n = program.size();
  std::vector<char> leader(n + 1, 0);
  if (n > 0) leader[0] = 1;
  if (program.entry < n) leader[program.entry] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const Instruction& ins = program.code[i];
    if (ins.has_code_target() && ins.imm < n) leader[ins.imm] = 1;
    if (ins.is_terminator()) leader[i + 1] = 1;
  }

  Cfg cfg;
  cfg.block_of.assign(n, 0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && !leader[j]) ++j;
    BasicBlock b;
    b.begin = i;
    b.end = j;
    for (std::size_t k = i; k < j; ++k) cfg.block_of[k] = static_cast<BlockId>(cfg.blocks.size());
    cfg.blocks.push_back(std::move(b));
    i = j;
  }

  for (BlockId id = 0; id < cfg.blocks.size(); ++id) {
    BasicBlock& b = cfg.blocks[id];
    const Instruction& last = program.code[b.end - 1];
    auto add = [&](CodeIndex target) {
      if (target >= n) return;
      const BlockId t = cfg.block_of[target];
      if (std::find(b.successors.begin(), b.successors.end(), t) == b.successors.end())
        b.successors.push_back(t);
    };
    switch (last.op) {
      case Opcode::Jmp: add(last.imm); break;
      case Opcode::Jcc:
        add(last.imm);
        add(b.end);
        break;
      case Opcode::Jr: b.indirect = true; break;
      case Opcode::Done: break;
      default: add(b.end); break;
    }
  }
  for (BlockId id = 0; id < cfg.blocks.size(); ++id)
    for (BlockId s : cfg.blocks[id].successors) cfg.blocks[s].predecessors.push_back(id);
  cfg.entry = n > 0 ? cfg.block_of[program.entry] : 0;
  return cfg;
}

std::vector<BlockId> immediate_dominators(const Cfg& cfg) {
  // Cooper, Harvey & Kennedy iterative algorithm over reverse postorder.
  const std::size_t n = cfg.blocks.size();
  constexpr BlockId kUndef = 0xffffffffU;
  std::vector<BlockId> idom(n, kUndef);
  if (n == 0) return idom;

  std::vector<BlockId> order;
  std::vector<char> visited(n, 0);
  std::vector<std::pair<BlockId, std::size_t>> stack;
  auto dfs = [&](BlockId root) {
    if (visited[root]) return;
    visited[root] = 1;
    stack.push_back({root, 0});
    while (!stack.empty()) {
      auto& [b, next] = stack.back();
      if (next < cfg.blocks[b].successors.size()) {
        const BlockId s = cfg.blocks[b].successors[next++];
        if (!visited[s]) {
          visited[s] = 1;
          stack.push_back({s, 0});
        }
      } else {
        order.push_back(b);
        stack.pop_back();
      }
    }
  };
  // Virtual root: the entry plus every block without static predecessors.
  std::vector<BlockId> roots{cfg.entry};
  for (BlockId b = 0; b < n; ++b)
    if (b != cfg.entry && cfg.blocks[b].predecessors.empty()) roots.push_back(b);
  for (BlockId r : roots) dfs(r);
  for (BlockId b = 0; b < n; ++b) dfs(b);
  std::reverse(order.begin(), order.end());
  std::vector<std::size_t> rpo(n, 0);
  for (std::size_t i = 0; i < order.size(); ++i) rpo[order[i]] = i;

  const BlockId virtual_root = static_cast<BlockId>(n);
  std::vector<BlockId> dom(n + 1, kUndef);
  dom[virtual_root] = virtual_root;
  std::vector<char> is_root(n, 0);
  for (BlockId r : roots) is_root[r] = 1;
  auto rpo_of = [&](BlockId b) { return b == virtual_root ? std::size_t{0} : rpo[b] + 1; };
  auto intersect = [&](BlockId a, BlockId b) {
    while (a != b) {
      while (rpo_of(a) > rpo_of(b)) a = dom[a];
      while (rpo_of(b) > rpo_of(a)) b = dom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (BlockId b : order) {
      BlockId best = is_root[b] ? virtual_root : kUndef;
      for (BlockId p : cfg.blocks[b].predecessors) {
        if (dom[p] == kUndef) continue;
        best = best == kUndef ? p : intersect(p, best);
      }
      if (best == kUndef) best = virtual_root;
      if (dom[b] != best) {
        dom[b] = best;
        changed = true;
      }
    }
  }
  for (BlockId b = 0; b < n; ++b) idom[b] = dom[b] == virtual_root ? b : dom[b];
  return idom;
}

bool dominates(const std::vector<BlockId>& idom, BlockId a, BlockId b) {
  while (true) {
    if (a == b) return true;
    const BlockId up = idom[b];
    if (up == b) return false;
    b = up;
  }
}

std::vector<std::vector<CodeIndex>> instruction_successors(const Program& program) {
  const std::size_t n = program.size();
  std::vector<CodeIndex> returns;
  for (const Instruction& ins : program.code)
    if (ins.op == Opcode::LoadImm && ins.code_address && ins.imm < n) returns.push_back(ins.imm);
  std::sort(returns.begin(), returns.end());
  returns.erase(std::unique(returns.begin(), returns.end()), returns.end());

  std::vector<std::vector<CodeIndex>> succ(n);
  for (CodeIndex i = 0; i < n; ++i) {
    const Instruction& ins = program.code[i];
    switch (ins.op) {
      case Opcode::Jmp: succ[i] = {ins.imm}; break;
      case Opcode::Jcc: succ[i] = {ins.imm, i + 1}; break;
      case Opcode::Jr: succ[i] = returns; break;
      case Opcode::Done: break;
      default: succ[i] = {i + 1}; break;
    }
    std::erase_if(succ[i], [n](CodeIndex t) { return t >= n; });
  }
  return succ;
}

std::vector<RegisterSet> live_in(const Program& program) {
  const std::size_t n = program.size();
  const auto succ = instruction_successors(program);
  std::vector<RegisterSet> use(n, 0), def(n, 0), in(n, 0);
  for (CodeIndex i = 0; i < n; ++i) {
    const Instruction& ins = program.code[i];
    for (Register r : ins.reads()) use[i] |= register_bit(r);
    if (ins.writes_register()) def[i] = register_bit(ins.dst);
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (CodeIndex k = n; k-- > 0;) {
      RegisterSet out = 0;
      for (CodeIndex s : succ[k]) out |= in[s];
      const RegisterSet v = use[k] | (out & ~def[k]);
      if (v != in[k]) {
        in[k] = v;
        changed = true;
      }
    }
  }
  return in;
}

}  // namespace pem
