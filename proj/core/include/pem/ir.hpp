#pragma once

// Toy instruction language: registers, values, instructions, programs and the
// textual assembly format.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pem {

/// Machine value. Arithmetic wraps modulo 2^64.
using Value = std::uint64_t;
using Addr = std::uint64_t;
/// Index of an instruction inside a program.
using CodeIndex = std::size_t;

class Register {
 public:
  static constexpr int kCount = 32;

  constexpr Register() = default;
  constexpr explicit Register(int index) : index_(static_cast<std::uint8_t>(index)) {
    if (index < 0 || index >= kCount) throw std::out_of_range("register index out of range");
  }
  constexpr int index() const { return index_; }
  friend constexpr auto operator<=>(Register, Register) = default;

 private:
  std::uint8_t index_ = 0;
};

enum class CmpOp : std::uint8_t { Eq, Ne, Gt, Ge, Lt, Le };
enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, And, Or, Xor, Shl, Shr };

enum class Opcode : std::uint8_t {
  Mov,      // dst = lhs
  LoadImm,  // dst = imm (imm is a code index when code_address is set)
  Compare,  // dst = lhs cmp rhs
  Arith,    // dst = lhs bin rhs
  Load,     // dst = [lhs]
  Store,    // [lhs] = rhs
  Jmp,      // goto imm
  Jcc,      // if lhs != 0 goto imm
  Jr,       // goto lhs
  Done,
  CallExt,  // external symbol imm; r0 = seed
};

/// One instruction. Fields not used by the opcode are kept zeroed by the
/// factory functions so that defaulted equality is structural.
struct Instruction {
  Opcode op = Opcode::Done;
  Register dst{};
  Register lhs{};
  Register rhs{};
  CmpOp cmp = CmpOp::Eq;
  BinOp bin = BinOp::Add;
  Value imm = 0;
  bool code_address = false;
  bool string_store = false;

  static Instruction mov(Register dst, Register src);
  static Instruction load_imm(Register dst, Value v);
  static Instruction load_addr(Register dst, CodeIndex target);
  static Instruction compare(Register dst, Register lhs, CmpOp op, Register rhs);
  static Instruction arith(Register dst, Register lhs, BinOp op, Register rhs);
  static Instruction load(Register dst, Register addr);
  static Instruction store(Register addr, Register src, bool string_store = false);
  static Instruction jmp(CodeIndex target);
  static Instruction jcc(Register cond, CodeIndex target);
  static Instruction jr(Register target);
  static Instruction done();
  static Instruction call_ext(std::size_t symbol);

  bool is_terminator() const {
    return op == Opcode::Jmp || op == Opcode::Jcc || op == Opcode::Jr || op == Opcode::Done;
  }
  /// True when imm names an instruction index (jumps and address loads).
  bool has_code_target() const {
    return op == Opcode::Jmp || op == Opcode::Jcc || (op == Opcode::LoadImm && code_address);
  }
  /// Register written by this instruction, if any.
  bool writes_register() const;
  /// Registers read by this instruction.
  std::vector<Register> reads() const;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Program {
  std::string name;
  std::vector<Instruction> code;
  CodeIndex entry = 0;
  /// Symbol id -> external symbol name.
  std::vector<std::string> symbols;
  /// Per-instruction provenance id, maintained by transform passes. Not part
  /// of structural equality and not serialized.
  std::vector<std::uint32_t> origin;

  std::size_t size() const { return code.size(); }
  std::uint32_t origin_of(CodeIndex i) const {
    return i < origin.size() ? origin[i] : static_cast<std::uint32_t>(i);
  }
  /// Resets provenance to identity.
  void reset_origin();

  /// Structural identity: instructions, entry and symbol table.
  friend bool operator==(const Program& a, const Program& b) {
    return a.code == b.code && a.entry == b.entry && a.symbols == b.symbols;
  }
};

class ProgramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Throws ProgramError when the program is structurally invalid: entry out of
/// range, jump target out of range, unknown symbol, or no `done` reachable.
void validate(const Program& program);

/// Parses assembly text. `name` becomes the program name.
Program parse(std::string_view text, std::string name = "main");
/// Emits canonical assembly text; parse(emit(p)) == p.
std::string emit(const Program& program);

std::string_view to_string(CmpOp op);
std::string_view to_string(BinOp op);

/// Evaluates a comparison with unsigned semantics.
bool evaluate(CmpOp op, Value lhs, Value rhs);
/// Evaluates a binary operation; division by zero yields 0, shifts use the
/// low six bits of the amount.
Value evaluate(BinOp op, Value lhs, Value rhs);

/// Builds programs with symbolic labels. Used by the corpus generator, tests
/// and transformation passes.
class ProgramBuilder {
 public:
  using Label = std::size_t;

  explicit ProgramBuilder(std::string name = "main");

  Label new_label();
  /// Binds `label` to the next emitted instruction.
  void bind(Label label);
  std::size_t symbol(const std::string& name);

  ProgramBuilder& emit(const Instruction& ins, std::uint32_t origin = kNoOrigin);
  ProgramBuilder& mov(int dst, int src);
  ProgramBuilder& li(int dst, Value v);
  ProgramBuilder& la(int dst, Label target);
  ProgramBuilder& cmp(int dst, int lhs, CmpOp op, int rhs);
  ProgramBuilder& op(int dst, int lhs, BinOp op, int rhs);
  ProgramBuilder& ld(int dst, int addr);
  ProgramBuilder& st(int addr, int src);
  ProgramBuilder& sts(int addr, int src);
  ProgramBuilder& jmp(Label target);
  ProgramBuilder& jcc(int cond, Label target);
  ProgramBuilder& jr(int reg);
  ProgramBuilder& done();
  ProgramBuilder& call(const std::string& symbol);

  void set_entry(Label label);
  std::size_t size() const { return code_.size(); }

  /// Resolves labels and validates.
  Program build() const;

  static constexpr std::uint32_t kNoOrigin = 0xffffffffU;

 private:
  ProgramBuilder& emit_target(Instruction ins, Label target);

  std::string name_;
  std::vector<Instruction> code_;
  std::vector<std::uint32_t> origin_;
  std::map<std::size_t, Label> fixups_;
  std::vector<std::ptrdiff_t> label_pos_;
  std::vector<std::string> symbols_;
  std::ptrdiff_t entry_label_ = -1;
};

}  // namespace pem
