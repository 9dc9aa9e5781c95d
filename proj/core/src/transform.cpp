#include "pem/transform.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "pem/cfg.hpp"

namespace pem {

namespace {
constexpr std::uint32_t kInserted = ProgramBuilder::kNoOrigin;
}

// ---------------------------------------------------------------------------
// CodeEditor

CodeEditor::CodeEditor(const Program& program)
    : name_(program.name), symbols_(program.symbols), entry_(program.entry) {
  const std::size_t n = program.size();
  nodes_.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    Node node;
    node.ins = program.code[i];
    node.origin = program.origin_of(i);
    node.prev = i == 0 ? kNone : i - 1;
    node.next = i + 1 < n ? i + 1 : kNone;
    nodes_.push_back(node);
  }
  head_ = n ? 0 : kNone;
  tail_ = n ? n - 1 : kNone;
}

std::vector<CodeEditor::NodeId> CodeEditor::order() const {
  std::vector<NodeId> out;
  for (NodeId id = head_; id != kNone; id = nodes_[id].next) out.push_back(id);
  return out;
}

CodeEditor::NodeId CodeEditor::next(NodeId id) const { return nodes_[id].next; }

CodeEditor::NodeId CodeEditor::link_new(const Instruction& ins, std::uint32_t origin, NodeId prev, NodeId next) {
  Node node;
  node.ins = ins;
  node.origin = origin;
  node.prev = prev;
  node.next = next;
  const NodeId id = nodes_.size();
  nodes_.push_back(node);
  if (prev != kNone) nodes_[prev].next = id;
  else head_ = id;
  if (next != kNone) nodes_[next].prev = id;
  else tail_ = id;
  return id;
}

CodeEditor::NodeId CodeEditor::insert_before(NodeId pos, const Instruction& ins, std::uint32_t origin,
                                             bool take_references) {
  const NodeId id = link_new(ins, origin, nodes_[pos].prev, pos);
  if (take_references) {
    for (Node& n : nodes_)
      if (n.alive && n.ins.has_code_target() && n.ins.imm == pos && &n != &nodes_[id]) n.ins.imm = id;
    if (entry_ == pos) entry_ = id;
  }
  return id;
}

CodeEditor::NodeId CodeEditor::insert_after(NodeId pos, const Instruction& ins, std::uint32_t origin) {
  return link_new(ins, origin, pos, nodes_[pos].next);
}

CodeEditor::NodeId CodeEditor::append(const Instruction& ins, std::uint32_t origin) {
  return link_new(ins, origin, tail_, kNone);
}

void CodeEditor::erase(NodeId id) {
  Node& n = nodes_[id];
  if (!n.alive) return;
  n.alive = false;
  if (n.prev != kNone) nodes_[n.prev].next = n.next;
  else head_ = n.next;
  if (n.next != kNone) nodes_[n.next].prev = n.prev;
  else tail_ = n.prev;
  // Keep n.next so that references can be forwarded.
}

std::size_t CodeEditor::references_to(NodeId target) const {
  std::size_t k = 0;
  for (const Node& n : nodes_)
    if (n.alive && n.ins.has_code_target() && n.ins.imm == target) ++k;
  return k;
}

Program CodeEditor::build() const {
  std::vector<CodeIndex> index(nodes_.size(), static_cast<CodeIndex>(-1));
  Program p;
  p.name = name_;
  p.symbols = symbols_;
  for (NodeId id = head_; id != kNone; id = nodes_[id].next) {
    index[id] = p.code.size();
    p.code.push_back(nodes_[id].ins);
    p.origin.push_back(nodes_[id].origin);
  }
  auto resolve = [&](NodeId id) {
    std::size_t hops = 0;
    while (id != kNone && !nodes_[id].alive) {
      id = nodes_[id].next;
      if (++hops > nodes_.size()) break;
    }
    if (id == kNone || !nodes_[id].alive) throw ProgramError("reference to erased code at the end of the program");
    return index[id];
  };
  for (Instruction& ins : p.code)
    if (ins.has_code_target()) ins.imm = resolve(ins.imm);
  p.entry = resolve(entry_);
  validate(p);
  return p;
}

// ---------------------------------------------------------------------------
// Pass plumbing

std::string_view to_string(PassKind k) {
  switch (k) {
    case PassKind::InsertShortcut: return "insert-shortcut";
    case PassKind::EliminateImplied: return "eliminate-implied";
    case PassKind::UnrollLoop: return "unroll-loop";
    case PassKind::InlineCallee: return "inline-callee";
    case PassKind::ReorderParams: return "reorder-params";
    case PassKind::RenameRegs: return "rename-regs";
  }
  return "?";
}

PassKind pass_kind_from_string(std::string_view name) {
  for (PassKind k : {PassKind::InsertShortcut, PassKind::EliminateImplied, PassKind::UnrollLoop,
                     PassKind::InlineCallee, PassKind::ReorderParams, PassKind::RenameRegs})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown pass '" + std::string(name) + "'");
}

TransformPlan TransformPlan::preset(std::string_view name, std::uint64_t rng_seed) {
  TransformPlan plan;
  plan.rng_seed = rng_seed;
  if (name == "identity") return plan;
  if (name == "O0") {
    plan.passes = {{PassKind::RenameRegs}};
    return plan;
  }
  if (name == "O3") {
    plan.passes = {{PassKind::InsertShortcut}, {PassKind::EliminateImplied}, {PassKind::UnrollLoop, 2},
                   {PassKind::InlineCallee},   {PassKind::ReorderParams},    {PassKind::RenameRegs}};
    return plan;
  }
  if (name == "rename") {
    plan.passes = {{PassKind::RenameRegs}, {PassKind::ReorderParams}};
    return plan;
  }
  throw std::invalid_argument("unknown plan preset '" + std::string(name) + "'");
}

namespace {

Program with_origin(const Program& p) {
  Program out = p;
  if (out.origin.size() != out.code.size()) out.reset_origin();
  return out;
}

bool chosen(TransformRng* rng, double fraction) {
  if (fraction >= 1.0) return true;
  if (fraction <= 0.0 || rng == nullptr) return fraction > 0.0 && rng == nullptr;
  return std::uniform_real_distribution<double>(0.0, 1.0)(*rng) < fraction;
}

bool is_plain_li(const Instruction& ins) { return ins.op == Opcode::LoadImm && !ins.code_address; }

bool writes(const Instruction& ins, Register r) { return ins.writes_register() && ins.dst == r; }

bool reads(const Instruction& ins, Register r) {
  for (Register x : ins.reads())
    if (x == r) return true;
  return false;
}

/// Constant held by `reg` just before instruction `at`, looking back no
/// further than `begin`.
std::optional<Value> constant_before(const Program& p, CodeIndex begin, CodeIndex at, Register reg) {
  for (CodeIndex k = at; k-- > begin;) {
    const Instruction& ins = p.code[k];
    if (writes(ins, reg)) {
      if (is_plain_li(ins)) return ins.imm;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

struct Interval {
  Value lo = 0;
  Value hi = std::numeric_limits<Value>::max();
  bool empty = false;
};

/// Values of x for which `x op k` holds.
Interval true_set(CmpOp op, Value k) {
  constexpr Value kMax = std::numeric_limits<Value>::max();
  switch (op) {
    case CmpOp::Gt: return k == kMax ? Interval{0, 0, true} : Interval{k + 1, kMax};
    case CmpOp::Ge: return {k, kMax};
    case CmpOp::Lt: return k == 0 ? Interval{0, 0, true} : Interval{0, k - 1};
    case CmpOp::Le: return {0, k};
    default: return {0, 0, true};
  }
}

bool is_range_cmp(CmpOp op) { return op == CmpOp::Gt || op == CmpOp::Ge || op == CmpOp::Lt || op == CmpOp::Le; }

}  // namespace

// ---------------------------------------------------------------------------
// insert_shortcut

PassResult insert_shortcut(const Program& in, TransformRng& rng, double fraction) {
  const Program program = with_origin(in);
  const std::size_t n = program.size();
  const auto live = live_in(program);
  CodeEditor ed(program);
  std::size_t sites = 0;

  for (CodeIndex i = 0; i + 2 < n;) {
    std::size_t units = 0;
    Register x{};
    Value lo = std::numeric_limits<Value>::max();
    for (CodeIndex u = i; u + 2 < n; u += 3) {
      const Instruction& li = program.code[u];
      const Instruction& cmp = program.code[u + 1];
      const Instruction& jcc = program.code[u + 2];
      if (!is_plain_li(li) || cmp.op != Opcode::Compare || cmp.cmp != CmpOp::Eq || jcc.op != Opcode::Jcc) break;
      const Register k = li.dst;
      Register other;
      if (cmp.rhs == k && cmp.lhs != k) other = cmp.lhs;
      else if (cmp.lhs == k && cmp.rhs != k) other = cmp.rhs;
      else break;
      if (cmp.dst != jcc.lhs || cmp.dst == other || cmp.dst == k) break;
      if (units > 0 && other != x) break;
      x = other;
      lo = std::min(lo, li.imm);
      ++units;
    }
    if (units < 2) {
      ++i;
      continue;
    }
    const CodeIndex fallback = i + 3 * units;
    const Register scratch_k = program.code[i].dst;
    const Register scratch_c = program.code[i + 1].dst;
    const bool dead = fallback < n && !(live[fallback] & (register_bit(scratch_k) | register_bit(scratch_c)));
    if (dead && lo > 0 && chosen(&rng, fraction)) {
      const auto head = ed.node_at(i);
      const auto g1 = ed.insert_before(head, Instruction::load_imm(scratch_k, lo), kInserted, true);
      const auto g2 = ed.insert_after(g1, Instruction::compare(scratch_c, x, CmpOp::Lt, scratch_k), kInserted);
      ed.insert_after(g2, Instruction::jcc(scratch_c, ed.node_at(fallback)), kInserted);
      ++sites;
    }
    i = fallback;
  }
  if (sites == 0) return {program, 0};
  return {ed.build(), sites};
}

// ---------------------------------------------------------------------------
// eliminate_implied

PassResult eliminate_implied(const Program& in, TransformRng* rng, double fraction) {
  const Program program = with_origin(in);
  const std::size_t n = program.size();
  const Cfg cfg = static_cfg(program);
  const auto live = live_in(program);
  std::vector<char> address_taken(n + 1, 0);
  for (const Instruction& ins : program.code)
    if (ins.op == Opcode::LoadImm && ins.code_address && ins.imm < n) address_taken[ins.imm] = 1;

  CodeEditor ed(program);
  std::size_t sites = 0;
  std::vector<char> used(cfg.blocks.size(), 0);

  for (CodeIndex j = 1; j < n; ++j) {
    const Instruction& jcc = program.code[j];
    const Instruction& cmp = program.code[j - 1];
    if (jcc.op != Opcode::Jcc || cmp.op != Opcode::Compare || !is_range_cmp(cmp.cmp)) continue;
    if (cmp.dst != jcc.lhs || cmp.dst == cmp.lhs) continue;
    const BlockId outer_block = cfg.block_of[j];
    const CodeIndex outer_begin = cfg.blocks[outer_block].begin;
    if (outer_begin > j - 1) continue;
    const Register x = cmp.lhs;
    const auto k1 = constant_before(program, outer_begin, j - 1, cmp.rhs);
    if (!k1 || cmp.rhs == x) continue;
    const Interval outer = true_set(cmp.cmp, *k1);
    if (outer.empty) continue;

    const CodeIndex t = jcc.imm;
    if (t >= n || t == program.entry || address_taken[t]) continue;
    const BlockId tb = cfg.block_of[t];
    const BasicBlock& block = cfg.blocks[tb];
    if (block.begin != t || tb == outer_block || used[tb]) continue;
    if (block.predecessors.size() != 1 || block.predecessors[0] != outer_block) continue;
    if (block.end < t + 3) continue;
    const CodeIndex ij = block.end - 1;
    const Instruction& ijcc = program.code[ij];
    const Instruction& icmp = program.code[ij - 1];
    if (ijcc.op != Opcode::Jcc || icmp.op != Opcode::Compare || !is_range_cmp(icmp.cmp)) continue;
    if (icmp.dst != ijcc.lhs || icmp.lhs != x || icmp.rhs == x) continue;
    bool clobbered = false;
    for (CodeIndex k = t; k < ij - 1; ++k) clobbered |= writes(program.code[k], x);
    if (clobbered) continue;
    const auto k2 = constant_before(program, t, ij - 1, icmp.rhs);
    if (!k2) continue;
    const Interval inner = true_set(icmp.cmp, *k2);
    const bool always_true = !inner.empty && inner.lo <= outer.lo && outer.hi <= inner.hi;
    const bool always_false = inner.empty || outer.hi < inner.lo || inner.hi < outer.lo;
    if (!always_true && !always_false) continue;
    const CodeIndex successor = always_true ? ijcc.imm : ij + 1;
    if (successor >= n || (live[successor] & register_bit(icmp.dst))) continue;
    if (!chosen(rng, fraction)) continue;

    used[tb] = 1;
    ed.erase(ed.node_at(ij - 1));
    if (always_true) {
      Instruction& replaced = ed.at(ed.node_at(ij));
      replaced = Instruction::jmp(ed.node_at(ijcc.imm));
    } else {
      ed.erase(ed.node_at(ij));
    }
    ++sites;
  }
  if (sites == 0) return {program, 0};
  return {ed.build(), sites};
}

// ---------------------------------------------------------------------------
// unroll_loop

PassResult unroll_loop(const Program& in, std::size_t factor, TransformRng* rng, double fraction) {
  const Program program = with_origin(in);
  const std::size_t n = program.size();
  if (factor <= 1) return {program, 0};

  // Incoming references per instruction, with their sources.
  std::vector<std::vector<CodeIndex>> refs(n + 1);
  for (CodeIndex k = 0; k < n; ++k) {
    const Instruction& ins = program.code[k];
    if (ins.has_code_target() && ins.imm <= n) refs[ins.imm].push_back(k);
  }

  CodeEditor ed(program);
  std::size_t sites = 0;
  std::ptrdiff_t last_end = -1;
  for (CodeIndex j = 0; j + 1 < n; ++j) {
    const Instruction& back = program.code[j];
    if (back.op != Opcode::Jcc || back.imm > j) continue;
    const CodeIndex h = back.imm;
    if (static_cast<std::ptrdiff_t>(h) <= last_end) continue;
    bool ok = true;
    for (CodeIndex k = h; k <= j && ok; ++k) {
      const Instruction& ins = program.code[k];
      if (ins.op == Opcode::Jr || ins.op == Opcode::Done || (ins.op == Opcode::LoadImm && ins.code_address))
        ok = false;
      else if ((ins.op == Opcode::Jmp || ins.op == Opcode::Jcc) && (ins.imm < h || ins.imm > j + 1))
        ok = false;
      if (k > h)
        for (CodeIndex src : refs[k])
          if (src < h || src > j) ok = false;
    }
    if (!ok || !chosen(rng, fraction)) continue;

    const auto exit = ed.node_at(j + 1);
    const std::size_t len = j - h + 1;
    std::vector<std::vector<CodeEditor::NodeId>> copies(factor, std::vector<CodeEditor::NodeId>(len));
    for (std::size_t k = 0; k < len; ++k) copies[0][k] = ed.node_at(h + k);
    CodeEditor::NodeId cursor = ed.insert_after(ed.node_at(j), Instruction::jmp(exit), kInserted);
    for (std::size_t m = 1; m < factor; ++m) {
      for (std::size_t k = 0; k < len; ++k) {
        cursor = ed.insert_after(cursor, program.code[h + k], program.origin_of(h + k));
        copies[m][k] = cursor;
      }
      if (m + 1 < factor) cursor = ed.insert_after(cursor, Instruction::jmp(exit), kInserted);
    }
    for (std::size_t m = 0; m < factor; ++m) {
      for (std::size_t k = 0; k < len; ++k) {
        Instruction& ins = ed.at(copies[m][k]);
        if (ins.op != Opcode::Jmp && ins.op != Opcode::Jcc) continue;
        const CodeIndex target = program.code[h + k].imm;
        if (k + 1 == len) ins.imm = copies[(m + 1) % factor][0];
        else if (target == j + 1) ins.imm = exit;
        else ins.imm = copies[m][target - h];
      }
    }
    last_end = static_cast<std::ptrdiff_t>(j);
    ++sites;
  }
  if (sites == 0) return {program, 0};
  return {ed.build(), sites};
}

// ---------------------------------------------------------------------------
// inline_callee

PassResult inline_callee(const Program& in, TransformRng* rng, double fraction) {
  const Program program = with_origin(in);
  const std::size_t n = program.size();
  const auto live = live_in(program);
  std::vector<std::vector<CodeIndex>> refs(n + 1);
  for (CodeIndex k = 0; k < n; ++k) {
    const Instruction& ins = program.code[k];
    if (ins.has_code_target() && ins.imm <= n) refs[ins.imm].push_back(k);
  }

  struct Callee {
    CodeIndex begin = 0;
    CodeIndex ret = 0;  // index of the jr
    Register link{};
  };
  // Returns the callee body starting at s when it is inlinable with link register `link`.
  auto callee_at = [&](CodeIndex s, Register link) -> std::optional<Callee> {
    if (s == 0 || s >= n || s == program.entry) return std::nullopt;
    const Instruction& before = program.code[s - 1];
    if (before.op != Opcode::Jmp && before.op != Opcode::Done && before.op != Opcode::Jr) return std::nullopt;
    CodeIndex e = s;
    for (; e < n; ++e) {
      const Instruction& ins = program.code[e];
      if (ins.op == Opcode::Jr) break;
      if (ins.op == Opcode::Done || (ins.op == Opcode::LoadImm && ins.code_address)) return std::nullopt;
      if (writes(ins, link) || reads(ins, link)) return std::nullopt;
    }
    if (e >= n || program.code[e].lhs != link) return std::nullopt;
    for (CodeIndex k = s; k < e; ++k) {
      const Instruction& ins = program.code[k];
      if ((ins.op == Opcode::Jmp || ins.op == Opcode::Jcc) && (ins.imm < s || ins.imm > e)) return std::nullopt;
    }
    for (CodeIndex k = s + 1; k <= e; ++k)
      for (CodeIndex src : refs[k])
        if (src < s || src > e) return std::nullopt;
    return Callee{s, e, link};
  };

  struct Site {
    CodeIndex at = 0;  // the `la`
    Callee callee;
  };
  std::vector<Site> sites_found;
  for (CodeIndex s = 0; s + 2 < n; ++s) {
    const Instruction& la = program.code[s];
    const Instruction& jmp = program.code[s + 1];
    if (la.op != Opcode::LoadImm || !la.code_address || la.imm != s + 2 || jmp.op != Opcode::Jmp) continue;
    if (live[s + 2] & register_bit(la.dst)) continue;
    auto callee = callee_at(jmp.imm, la.dst);
    if (!callee) continue;
    // Every reference to the callee entry must be a call site.
    bool only_calls = true;
    for (CodeIndex src : refs[callee->begin])
      if (program.code[src].op != Opcode::Jmp || src == 0 || src - 1 >= n ||
          !(program.code[src - 1].op == Opcode::LoadImm && program.code[src - 1].code_address))
        only_calls = false;
    if (!only_calls) continue;
    sites_found.push_back({s, *callee});
  }

  CodeEditor ed(program);
  std::size_t sites = 0;
  std::vector<char> removed_site(n, 0);
  for (const Site& site : sites_found) {
    if (!chosen(rng, fraction)) continue;
    const Callee& c = site.callee;
    const auto ret_node = ed.node_at(site.at + 2);
    std::vector<CodeEditor::NodeId> copy(c.ret - c.begin);
    CodeEditor::NodeId cursor = CodeEditor::kNone;
    for (CodeIndex k = c.begin; k < c.ret; ++k) {
      const Instruction& ins = program.code[k];
      cursor = cursor == CodeEditor::kNone ? ed.insert_before(ed.node_at(site.at), ins, program.origin_of(k), true)
                                           : ed.insert_after(cursor, ins, program.origin_of(k));
      copy[k - c.begin] = cursor;
    }
    for (CodeIndex k = c.begin; k < c.ret; ++k) {
      Instruction& ins = ed.at(copy[k - c.begin]);
      if (ins.op != Opcode::Jmp && ins.op != Opcode::Jcc) continue;
      ins.imm = ins.imm == c.ret ? ret_node : copy[ins.imm - c.begin];
    }
    ed.erase(ed.node_at(site.at));
    ed.erase(ed.node_at(site.at + 1));
    removed_site[site.at] = 1;
    ++sites;
  }
  // Drop callees that lost all their callers.
  std::vector<char> dropped(n, 0);
  for (const Site& site : sites_found) {
    const Callee& c = site.callee;
    if (dropped[c.begin]) continue;
    bool all = true;
    for (const Site& other : sites_found)
      if (other.callee.begin == c.begin && !removed_site[other.at]) all = false;
    if (!all || ed.references_to(ed.node_at(c.begin)) != 0) continue;
    for (CodeIndex k = c.begin; k <= c.ret; ++k) ed.erase(ed.node_at(k));
    dropped[c.begin] = 1;
  }
  if (sites == 0) return {program, 0};
  return {ed.build(), sites};
}

// ---------------------------------------------------------------------------
// Register permutations

Program rename_registers(const Program& in, const std::vector<int>& perm) {
  if (perm.size() != static_cast<std::size_t>(Register::kCount) || perm[0] != 0)
    throw std::invalid_argument("register permutation must cover all registers and fix r0");
  Program p = with_origin(in);
  for (Instruction& ins : p.code) {
    ins.dst = Register(perm[ins.dst.index()]);
    ins.lhs = Register(perm[ins.lhs.index()]);
    ins.rhs = Register(perm[ins.rhs.index()]);
  }
  return p;
}

namespace {

PassResult permute_range(const Program& program, TransformRng& rng, int first, int last) {
  std::vector<int> perm(Register::kCount);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin() + first, perm.begin() + last + 1, rng);
  return {rename_registers(program, perm), 1};
}

}  // namespace

PassResult reorder_params(const Program& program, TransformRng& rng) { return permute_range(program, rng, 1, 6); }
PassResult rename_regs(const Program& program, TransformRng& rng) { return permute_range(program, rng, 7, 29); }

TransformReport apply(const Program& program, const TransformPlan& plan) {
  TransformRng rng(plan.rng_seed);
  TransformReport report{with_origin(program), {}};
  for (const Pass& pass : plan.passes) {
    PassResult r;
    switch (pass.kind) {
      case PassKind::InsertShortcut: r = insert_shortcut(report.program, rng, pass.fraction); break;
      case PassKind::EliminateImplied: r = eliminate_implied(report.program, &rng, pass.fraction); break;
      case PassKind::UnrollLoop: r = unroll_loop(report.program, pass.factor, &rng, pass.fraction); break;
      case PassKind::InlineCallee: r = inline_callee(report.program, &rng, pass.fraction); break;
      case PassKind::ReorderParams: r = reorder_params(report.program, rng); break;
      case PassKind::RenameRegs: r = rename_regs(report.program, rng); break;
    }
    report.program = std::move(r.program);
    report.sites.emplace_back(pass.kind, r.sites);
  }
  report.program.name = program.name;
  return report;
}

// ---------------------------------------------------------------------------
// Negative mutations

ObservableValues behavior(const ObservableValues& ov) {
  ObservableValues out;
  for (const auto& [k, n] : ov.counts())
    if (k.kind != ValueKind::JumpTarget && k.kind != ValueKind::PredicateSel) out.add(k.kind, k.value, n);
  return out;
}

namespace {

ObservableValues observed(const Program& p, Value seed, const InterpConfig& config, std::uint64_t pm_seed) {
  ObservableValues ov = seed_path_run(p, seed, config, pm_seed).ov;
  ObservableValues out;
  for (const auto& [k, n] : ov.counts())
    if (k.kind != ValueKind::JumpTarget) out.add(k.kind, k.value, n);
  return out;
}

}  // namespace

Program mutate_negative(const Program& program, TransformRng& rng, const std::vector<Value>& seeds,
                        const InterpConfig& config, std::uint64_t pm_seed) {
  if (seeds.empty()) throw std::invalid_argument("mutation check needs at least one seed");
  std::vector<ObservableValues> base;
  for (Value s : seeds) base.push_back(observed(program, s, config, pm_seed));

  std::vector<CodeIndex> constants, arith, compares, branches, leaders;
  const Cfg cfg = static_cfg(program);
  for (const BasicBlock& b : cfg.blocks) leaders.push_back(b.begin);
  for (CodeIndex i = 0; i < program.size(); ++i) {
    const Instruction& ins = program.code[i];
    if (is_plain_li(ins)) constants.push_back(i);
    else if (ins.op == Opcode::Arith) arith.push_back(i);
    else if (ins.op == Opcode::Compare) compares.push_back(i);
    else if (ins.op == Opcode::Jcc) branches.push_back(i);
  }
  auto pick = [&](const std::vector<CodeIndex>& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };

  for (int attempt = 0; attempt < 256; ++attempt) {
    Program m = program;
    const int kind = std::uniform_int_distribution<int>(0, 3)(rng);
    if (kind == 0 && !constants.empty()) {
      Instruction& ins = m.code[pick(constants)];
      ins.imm += attempt < 64 ? 1 : (rng() | 1);
    } else if (kind == 1 && !arith.empty()) {
      Instruction& ins = m.code[pick(arith)];
      const int cur = static_cast<int>(ins.bin);
      ins.bin = static_cast<BinOp>((cur + 1 + std::uniform_int_distribution<int>(0, 7)(rng)) % 9);
    } else if (kind == 2 && !compares.empty()) {
      static constexpr std::array<CmpOp, 6> negate = {CmpOp::Ne, CmpOp::Eq, CmpOp::Le, CmpOp::Lt, CmpOp::Ge, CmpOp::Gt};
      Instruction& ins = m.code[pick(compares)];
      ins.cmp = negate[static_cast<std::size_t>(ins.cmp)];
    } else if (kind == 3 && !branches.empty() && leaders.size() > 1) {
      Instruction& ins = m.code[pick(branches)];
      const CodeIndex target = pick(leaders);
      if (target == ins.imm) continue;
      ins.imm = target;
    } else {
      continue;
    }
    try {
      validate(m);
    } catch (const ProgramError&) {
      continue;
    }
    for (std::size_t s = 0; s < seeds.size(); ++s)
      if (!(observed(m, seeds[s], config, pm_seed) == base[s])) return m;
  }
  throw ProgramError("no behavior-changing mutation found for '" + program.name + "'");
}

}  // namespace pem
