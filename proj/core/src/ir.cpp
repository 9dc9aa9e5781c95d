#include "pem/ir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pem {

Instruction Instruction::mov(Register dst, Register src) {
  Instruction i;
  i.op = Opcode::Mov;
  i.dst = dst;
  i.lhs = src;
  return i;
}

Instruction Instruction::load_imm(Register dst, Value v) {
  Instruction i;
  i.op = Opcode::LoadImm;
  i.dst = dst;
  i.imm = v;
  return i;
}

Instruction Instruction::load_addr(Register dst, CodeIndex target) {
  Instruction i = load_imm(dst, target);
  i.code_address = true;
  return i;
}

Instruction Instruction::compare(Register dst, Register lhs, CmpOp op, Register rhs) {
  Instruction i;
  i.op = Opcode::Compare;
  i.dst = dst;
  i.lhs = lhs;
  i.cmp = op;
  i.rhs = rhs;
  return i;
}

Instruction Instruction::arith(Register dst, Register lhs, BinOp op, Register rhs) {
  Instruction i;
  i.op = Opcode::Arith;
  i.dst = dst;
  i.lhs = lhs;
  i.bin = op;
  i.rhs = rhs;
  return i;
}

Instruction Instruction::load(Register dst, Register addr) {
  Instruction i;
  i.op = Opcode::Load;
  i.dst = dst;
  i.lhs = addr;
  return i;
}

Instruction Instruction::store(Register addr, Register src, bool string_store) {
  Instruction i;
  i.op = Opcode::Store;
  i.lhs = addr;
  i.rhs = src;
  i.string_store = string_store;
  return i;
}

Instruction Instruction::jmp(CodeIndex target) {
  Instruction i;
  i.op = Opcode::Jmp;
  i.imm = target;
  return i;
}

Instruction Instruction::jcc(Register cond, CodeIndex target) {
  Instruction i;
  i.op = Opcode::Jcc;
  i.lhs = cond;
  i.imm = target;
  return i;
}

Instruction Instruction::jr(Register target) {
  Instruction i;
  i.op = Opcode::Jr;
  i.lhs = target;
  return i;
}

Instruction Instruction::done() { return Instruction{}; }

Instruction Instruction::call_ext(std::size_t symbol) {
  Instruction i;
  i.op = Opcode::CallExt;
  i.imm = symbol;
  return i;
}

bool Instruction::writes_register() const {
  switch (op) {
    case Opcode::Mov:
    case Opcode::LoadImm:
    case Opcode::Compare:
    case Opcode::Arith:
    case Opcode::Load:
    case Opcode::CallExt:
      return true;
    default:
      return false;
  }
}

std::vector<Register> Instruction::reads() const {
  switch (op) {
    case Opcode::Mov:
    case Opcode::Load:
    case Opcode::Jcc:
    case Opcode::Jr:
      return {lhs};
    case Opcode::Compare:
    case Opcode::Arith:
    case Opcode::Store:
      return {lhs, rhs};
    default:
      return {};
  }
}

void Program::reset_origin() {
  origin.resize(code.size());
  for (std::size_t i = 0; i < code.size(); ++i) origin[i] = static_cast<std::uint32_t>(i);
}

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

bool evaluate(CmpOp op, Value lhs, Value rhs) {
  switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return lhs != rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
  }
  return false;
}

Value evaluate(BinOp op, Value lhs, Value rhs) {
  switch (op) {
    case BinOp::Add: return lhs + rhs;
    case BinOp::Sub: return lhs - rhs;
    case BinOp::Mul: return lhs * rhs;
    case BinOp::Div: return rhs == 0 ? 0 : lhs / rhs;
    case BinOp::And: return lhs & rhs;
    case BinOp::Or: return lhs | rhs;
    case BinOp::Xor: return lhs ^ rhs;
    case BinOp::Shl: return lhs << (rhs & 63U);
    case BinOp::Shr: return lhs >> (rhs & 63U);
  }
  return 0;
}

namespace {

constexpr std::string_view kCmpNames[] = {"eq", "ne", "gt", "ge", "lt", "le"};
constexpr std::string_view kBinNames[] = {"add", "sub", "mul", "div", "and",
                                          "or",  "xor", "shl", "shr"};

}  // namespace

std::string_view to_string(CmpOp op) { return kCmpNames[static_cast<int>(op)]; }
std::string_view to_string(BinOp op) { return kBinNames[static_cast<int>(op)]; }

void validate(const Program& program) {
  const std::size_t n = program.size();
  if (n == 0) throw ProgramError(program.name + ": empty program");
  if (program.entry >= n) throw ProgramError(program.name + ": entry out of range");
  std::vector<CodeIndex> address_taken;
  for (std::size_t i = 0; i < n; ++i) {
    const Instruction& ins = program.code[i];
    if (ins.has_code_target() && ins.imm >= n)
      throw ProgramError(program.name + ": instruction " + std::to_string(i) +
                         " targets out-of-range index " + std::to_string(ins.imm));
    if (ins.op == Opcode::CallExt && ins.imm >= program.symbols.size())
      throw ProgramError(program.name + ": instruction " + std::to_string(i) +
                         " calls unknown symbol " + std::to_string(ins.imm));
    if (ins.op == Opcode::LoadImm && ins.code_address) address_taken.push_back(ins.imm);
  }
  if (!program.code.back().is_terminator())
    throw ProgramError(program.name + ": control falls off the end of the program");

  std::vector<char> seen(n, 0);
  std::vector<CodeIndex> work{program.entry};
  seen[program.entry] = 1;
  bool done_reachable = false;
  auto push = [&](CodeIndex t) {
    if (t < n && !seen[t]) {
      seen[t] = 1;
      work.push_back(t);
    }
  };
  while (!work.empty()) {
    const CodeIndex i = work.back();
    work.pop_back();
    const Instruction& ins = program.code[i];
    switch (ins.op) {
      case Opcode::Done: done_reachable = true; break;
      case Opcode::Jmp: push(ins.imm); break;
      case Opcode::Jcc:
        push(ins.imm);
        push(i + 1);
        break;
      case Opcode::Jr:
        for (CodeIndex t : address_taken) push(t);
        break;
      default: push(i + 1); break;
    }
  }
  if (!done_reachable) throw ProgramError(program.name + ": no reachable done instruction");
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  std::string text;
  std::size_t column;
};

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  [[noreturn]] void fail(std::size_t col, const std::string& msg) const {
    throw ParseError(line_no_, col + 1, msg);
  }

  void skip_ws() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= line_.size();
  }
  std::size_t column() const { return pos_; }

  bool peek_ident_colon() {
    skip_ws();
    std::size_t p = pos_;
    if (p >= line_.size() || !is_ident_start(line_[p]) || line_[p] == '.') return false;
    while (p < line_.size() && is_ident_char(line_[p])) ++p;
    while (p < line_.size() && (line_[p] == ' ' || line_[p] == '\t')) ++p;
    return p < line_.size() && line_[p] == ':';
  }

  Token ident() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= line_.size() || !is_ident_start(line_[pos_])) fail(start, "expected identifier");
    while (pos_ < line_.size() && is_ident_char(line_[pos_])) ++pos_;
    return {std::string(line_.substr(start, pos_ - start)), start};
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= line_.size() || line_[pos_] != c)
      fail(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  Register reg() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= line_.size() || line_[pos_] != 'r') fail(start, "expected register");
    ++pos_;
    const std::size_t digits = pos_;
    while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    if (digits == pos_) fail(start, "expected register");
    int idx = 0;
    auto [ptr, ec] = std::from_chars(line_.data() + digits, line_.data() + pos_, idx);
    if (ec != std::errc{} || idx < 0 || idx >= Register::kCount)
      fail(start, "register index out of range: " + std::string(line_.substr(start, pos_ - start)));
    return Register(idx);
  }

  Register mem() {
    expect('[');
    Register r = reg();
    expect(']');
    return r;
  }

  Value number() {
    skip_ws();
    const std::size_t start = pos_;
    int base = 10;
    if (line_.substr(pos_, 2) == "0x" || line_.substr(pos_, 2) == "0X") {
      base = 16;
      pos_ += 2;
    }
    const std::size_t digits = pos_;
    while (pos_ < line_.size() && std::isxdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    Value v = 0;
    auto [ptr, ec] = std::from_chars(line_.data() + digits, line_.data() + pos_, v, base);
    if (digits == pos_ || ec != std::errc{} || ptr != line_.data() + pos_)
      fail(start, "invalid immediate");
    return v;
  }

  bool peek_number() {
    skip_ws();
    return pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]));
  }

  void end() {
    if (!at_end()) fail(pos_, "unexpected trailing input");
  }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

struct PendingRef {
  std::size_t instruction;
  std::string label;
  std::size_t line;
  std::size_t column;
};

}  // namespace

Program parse(std::string_view text, std::string name) {
  Program program;
  program.name = std::move(name);
  std::unordered_map<std::string, CodeIndex> labels;
  std::unordered_map<std::string, std::size_t> symbol_ids;
  std::vector<PendingRef> refs;
  std::string entry_label;
  std::size_t entry_line = 0;
  std::size_t entry_col = 0;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (auto semi = line.find(';'); semi != std::string_view::npos) line = line.substr(0, semi);

    LineParser p(line, line_no);
    while (p.peek_ident_colon()) {
      Token label = p.ident();
      p.expect(':');
      if (!labels.emplace(label.text, program.code.size()).second)
        p.fail(label.column, "duplicate label '" + label.text + "'");
    }
    if (p.at_end()) {
      if (nl == text.size()) break;
      continue;
    }

    Token head = p.ident();
    const std::string& m = head.text;
    auto code_ref = [&](Instruction ins) {
      Token target = p.ident();
      refs.push_back({program.code.size(), target.text, line_no, target.column + 1});
      program.code.push_back(ins);
    };

    if (m == ".entry") {
      Token t = p.ident();
      entry_label = t.text;
      entry_line = line_no;
      entry_col = t.column + 1;
    } else if (m == ".extern") {
      Token t = p.ident();
      if (!symbol_ids.emplace(t.text, program.symbols.size()).second)
        p.fail(t.column, "duplicate extern '" + t.text + "'");
      program.symbols.push_back(t.text);
    } else if (m == "mov") {
      Register d = p.reg();
      p.expect(',');
      program.code.push_back(Instruction::mov(d, p.reg()));
    } else if (m == "li") {
      Register d = p.reg();
      p.expect(',');
      program.code.push_back(Instruction::load_imm(d, p.number()));
    } else if (m == "la") {
      Register d = p.reg();
      p.expect(',');
      code_ref(Instruction::load_addr(d, 0));
    } else if (m.rfind("cmp.", 0) == 0) {
      auto it = std::find(std::begin(kCmpNames), std::end(kCmpNames), std::string_view(m).substr(4));
      if (it == std::end(kCmpNames)) p.fail(head.column, "unknown comparison '" + m + "'");
      Register d = p.reg();
      p.expect(',');
      Register a = p.reg();
      p.expect(',');
      Register b = p.reg();
      program.code.push_back(
          Instruction::compare(d, a, static_cast<CmpOp>(it - std::begin(kCmpNames)), b));
    } else if (auto bit = std::find(std::begin(kBinNames), std::end(kBinNames), m);
               bit != std::end(kBinNames)) {
      Register d = p.reg();
      p.expect(',');
      Register a = p.reg();
      p.expect(',');
      Register b = p.reg();
      program.code.push_back(
          Instruction::arith(d, a, static_cast<BinOp>(bit - std::begin(kBinNames)), b));
    } else if (m == "ld") {
      Register d = p.reg();
      p.expect(',');
      program.code.push_back(Instruction::load(d, p.mem()));
    } else if (m == "st" || m == "st.s") {
      Register a = p.mem();
      p.expect(',');
      program.code.push_back(Instruction::store(a, p.reg(), m == "st.s"));
    } else if (m == "jmp") {
      code_ref(Instruction::jmp(0));
    } else if (m == "jcc") {
      Register c = p.reg();
      p.expect(',');
      code_ref(Instruction::jcc(c, 0));
    } else if (m == "jr") {
      program.code.push_back(Instruction::jr(p.reg()));
    } else if (m == "done") {
      program.code.push_back(Instruction::done());
    } else if (m == "call") {
      Token t = p.ident();
      auto it = symbol_ids.find(t.text);
      if (it == symbol_ids.end()) p.fail(t.column, "undeclared external symbol '" + t.text + "'");
      program.code.push_back(Instruction::call_ext(it->second));
    } else {
      p.fail(head.column, "unknown mnemonic '" + m + "'");
    }
    p.end();
    if (nl == text.size()) break;
  }

  for (const PendingRef& ref : refs) {
    auto it = labels.find(ref.label);
    if (it == labels.end()) throw ParseError(ref.line, ref.column, "undefined label '" + ref.label + "'");
    program.code[ref.instruction].imm = it->second;
  }
  if (!entry_label.empty()) {
    auto it = labels.find(entry_label);
    if (it == labels.end())
      throw ParseError(entry_line, entry_col, "undefined label '" + entry_label + "'");
    program.entry = it->second;
  } else if (auto it = labels.find("main"); it != labels.end()) {
    program.entry = it->second;
  }
  // A label bound past the last instruction has nothing to point at.
  for (const auto& [label, index] : labels)
    if (index >= program.code.size() && !program.code.empty())
      throw ParseError(line_no, 1, "label '" + label + "' does not precede an instruction");

  program.reset_origin();
  validate(program);
  return program;
}

std::string emit(const Program& program) {
  std::set<CodeIndex> targets{program.entry};
  for (const Instruction& ins : program.code)
    if (ins.has_code_target()) targets.insert(ins.imm);
  auto label = [](CodeIndex i) { return "L" + std::to_string(i); };

  std::ostringstream out;
  for (const std::string& s : program.symbols) out << ".extern " << s << '\n';
  out << ".entry " << label(program.entry) << '\n';
  for (std::size_t i = 0; i < program.code.size(); ++i) {
    if (targets.count(i)) out << label(i) << ":\n";
    const Instruction& ins = program.code[i];
    auto r = [](Register x) { return "r" + std::to_string(x.index()); };
    out << "  ";
    switch (ins.op) {
      case Opcode::Mov: out << "mov " << r(ins.dst) << ", " << r(ins.lhs); break;
      case Opcode::LoadImm:
        if (ins.code_address)
          out << "la " << r(ins.dst) << ", " << label(ins.imm);
        else
          out << "li " << r(ins.dst) << ", 0x" << std::hex << ins.imm << std::dec;
        break;
      case Opcode::Compare:
        out << "cmp." << to_string(ins.cmp) << ' ' << r(ins.dst) << ", " << r(ins.lhs) << ", "
            << r(ins.rhs);
        break;
      case Opcode::Arith:
        out << to_string(ins.bin) << ' ' << r(ins.dst) << ", " << r(ins.lhs) << ", " << r(ins.rhs);
        break;
      case Opcode::Load: out << "ld " << r(ins.dst) << ", [" << r(ins.lhs) << "]"; break;
      case Opcode::Store:
        out << (ins.string_store ? "st.s [" : "st [") << r(ins.lhs) << "], " << r(ins.rhs);
        break;
      case Opcode::Jmp: out << "jmp " << label(ins.imm); break;
      case Opcode::Jcc: out << "jcc " << r(ins.lhs) << ", " << label(ins.imm); break;
      case Opcode::Jr: out << "jr " << r(ins.lhs); break;
      case Opcode::Done: out << "done"; break;
      case Opcode::CallExt: out << "call " << program.symbols.at(ins.imm); break;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Builder

ProgramBuilder::ProgramBuilder(std::string name) : name_(std::move(name)) {}

ProgramBuilder::Label ProgramBuilder::new_label() {
  label_pos_.push_back(-1);
  return label_pos_.size() - 1;
}

void ProgramBuilder::bind(Label label) {
  if (label_pos_.at(label) >= 0) throw ProgramError("label bound twice");
  label_pos_[label] = static_cast<std::ptrdiff_t>(code_.size());
}

std::size_t ProgramBuilder::symbol(const std::string& name) {
  auto it = std::find(symbols_.begin(), symbols_.end(), name);
  if (it != symbols_.end()) return static_cast<std::size_t>(it - symbols_.begin());
  symbols_.push_back(name);
  return symbols_.size() - 1;
}

ProgramBuilder& ProgramBuilder::emit(const Instruction& ins, std::uint32_t origin) {
  code_.push_back(ins);
  origin_.push_back(origin);
  return *this;
}

ProgramBuilder& ProgramBuilder::emit_target(Instruction ins, Label target) {
  fixups_[code_.size()] = target;
  return emit(ins);
}

ProgramBuilder& ProgramBuilder::mov(int d, int s) { return emit(Instruction::mov(Register(d), Register(s))); }
ProgramBuilder& ProgramBuilder::li(int d, Value v) { return emit(Instruction::load_imm(Register(d), v)); }
ProgramBuilder& ProgramBuilder::la(int d, Label t) { return emit_target(Instruction::load_addr(Register(d), 0), t); }
ProgramBuilder& ProgramBuilder::cmp(int d, int a, CmpOp op, int b) {
  return emit(Instruction::compare(Register(d), Register(a), op, Register(b)));
}
ProgramBuilder& ProgramBuilder::op(int d, int a, BinOp op, int b) {
  return emit(Instruction::arith(Register(d), Register(a), op, Register(b)));
}
ProgramBuilder& ProgramBuilder::ld(int d, int a) { return emit(Instruction::load(Register(d), Register(a))); }
ProgramBuilder& ProgramBuilder::st(int a, int s) { return emit(Instruction::store(Register(a), Register(s))); }
ProgramBuilder& ProgramBuilder::sts(int a, int s) {
  return emit(Instruction::store(Register(a), Register(s), true));
}
ProgramBuilder& ProgramBuilder::jmp(Label t) { return emit_target(Instruction::jmp(0), t); }
ProgramBuilder& ProgramBuilder::jcc(int c, Label t) { return emit_target(Instruction::jcc(Register(c), 0), t); }
ProgramBuilder& ProgramBuilder::jr(int r) { return emit(Instruction::jr(Register(r))); }
ProgramBuilder& ProgramBuilder::done() { return emit(Instruction::done()); }
ProgramBuilder& ProgramBuilder::call(const std::string& s) { return emit(Instruction::call_ext(symbol(s))); }

void ProgramBuilder::set_entry(Label label) { entry_label_ = static_cast<std::ptrdiff_t>(label); }

Program ProgramBuilder::build() const {
  Program p;
  p.name = name_;
  p.code = code_;
  p.symbols = symbols_;
  auto resolve = [&](Label l) -> CodeIndex {
    const std::ptrdiff_t pos = label_pos_.at(l);
    if (pos < 0 || static_cast<std::size_t>(pos) >= code_.size())
      throw ProgramError(name_ + ": unbound label");
    return static_cast<CodeIndex>(pos);
  };
  for (const auto& [index, label] : fixups_) p.code[index].imm = resolve(label);
  p.entry = entry_label_ >= 0 ? resolve(static_cast<Label>(entry_label_)) : 0;
  p.origin.resize(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i)
    p.origin[i] = origin_[i] == kNoOrigin ? static_cast<std::uint32_t>(i) : origin_[i];
  validate(p);
  return p;
}

}  // namespace pem
