#pragma once

// IR-level rewrites standing in for compiler optimizations, plus mutators
// that deliberately change behavior.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pem/interp.hpp"
#include "pem/ir.hpp"

namespace pem {

/// Editable instruction list. Jump targets refer to node ids, so insertions
/// and erasures keep references intact.
class CodeEditor {
 public:
  using NodeId = std::size_t;
  static constexpr NodeId kNone = static_cast<NodeId>(-1);

  explicit CodeEditor(const Program& program);

  /// Node holding original instruction i.
  NodeId node_at(CodeIndex i) const { return i; }
  std::vector<NodeId> order() const;
  bool alive(NodeId id) const { return nodes_[id].alive; }
  NodeId next(NodeId id) const;

  /// Instruction with code targets expressed as node ids.
  const Instruction& at(NodeId id) const { return nodes_[id].ins; }
  Instruction& at(NodeId id) { return nodes_[id].ins; }
  std::uint32_t origin(NodeId id) const { return nodes_[id].origin; }

  /// Inserts before `pos`. With `take_references`, jumps to `pos` now land
  /// on the inserted node.
  NodeId insert_before(NodeId pos, const Instruction& ins, std::uint32_t origin, bool take_references);
  NodeId insert_after(NodeId pos, const Instruction& ins, std::uint32_t origin);
  NodeId append(const Instruction& ins, std::uint32_t origin);
  /// References to an erased node move to the next live node.
  void erase(NodeId id);
  /// Number of live instructions referring to `target`.
  std::size_t references_to(NodeId target) const;

  Program build() const;

 private:
  struct Node {
    Instruction ins;
    std::uint32_t origin = 0;
    NodeId prev = kNone;
    NodeId next = kNone;
    bool alive = true;
  };
  NodeId link_new(const Instruction& ins, std::uint32_t origin, NodeId prev, NodeId next);

  std::string name_;
  std::vector<std::string> symbols_;
  std::vector<Node> nodes_;
  NodeId head_ = kNone;
  NodeId tail_ = kNone;
  NodeId entry_ = 0;
};

enum class PassKind : std::uint8_t {
  InsertShortcut,
  EliminateImplied,
  UnrollLoop,
  InlineCallee,
  ReorderParams,
  RenameRegs,
};
std::string_view to_string(PassKind k);
PassKind pass_kind_from_string(std::string_view name);

struct Pass {
  PassKind kind = PassKind::RenameRegs;
  std::size_t factor = 2;   // unroll factor
  double fraction = 1.0;    // share of eligible sites rewritten
};

struct TransformPlan {
  std::vector<Pass> passes;
  std::uint64_t rng_seed = 0;

  static TransformPlan preset(std::string_view name, std::uint64_t rng_seed = 0);
};

struct PassResult {
  Program program;
  std::size_t sites = 0;  // rewritten sites; 0 means no eligible site
};

using TransformRng = std::mt19937_64;

PassResult insert_shortcut(const Program& program, TransformRng& rng, double fraction = 1.0);
PassResult eliminate_implied(const Program& program, TransformRng* rng = nullptr, double fraction = 1.0);
PassResult unroll_loop(const Program& program, std::size_t factor, TransformRng* rng = nullptr,
                       double fraction = 1.0);
PassResult inline_callee(const Program& program, TransformRng* rng = nullptr, double fraction = 1.0);
/// Permutes the parameter registers r1..r6.
PassResult reorder_params(const Program& program, TransformRng& rng);
/// Permutes the scratch registers r7..r29.
PassResult rename_regs(const Program& program, TransformRng& rng);
/// Applies a register permutation (index -> index) to every instruction.
Program rename_registers(const Program& program, const std::vector<int>& permutation);

struct TransformReport {
  Program program;
  std::vector<std::pair<PassKind, std::size_t>> sites;
};

TransformReport apply(const Program& program, const TransformPlan& plan);

/// Copy of the OV without the kinds a semantics-preserving pass may change:
/// jump targets and comparison selectivities.
ObservableValues behavior(const ObservableValues& ov);

/// Behavior-changing edit, verified to alter the faithful-run OV on at least
/// one of `seeds`. Throws ProgramError if no edit within the attempt limit
/// changes behavior.
Program mutate_negative(const Program& program, TransformRng& rng, const std::vector<Value>& seeds,
                        const InterpConfig& config = {}, std::uint64_t pm_seed = 0);

}  // namespace pem
