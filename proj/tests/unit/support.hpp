#pragma once

#include <random>
#include <string>

#include "pem/ir.hpp"

namespace pem::test {

// Random but structurally valid program: arbitrary instructions with
// in-range targets, ending in `done`.
inline Program random_program(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t hi) { return static_cast<std::size_t>(rng() % hi); };
  auto reg = [&] { return Register(static_cast<int>(pick(Register::kCount))); };
  Program p;
  p.name = "rand" + std::to_string(seed);
  p.symbols = {"malloc", "memcpy", "puts"};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    switch (pick(11)) {
      case 0: p.code.push_back(Instruction::mov(reg(), reg())); break;
      case 1: p.code.push_back(Instruction::load_imm(reg(), rng())); break;
      case 2: p.code.push_back(Instruction::load_addr(reg(), pick(n))); break;
      case 3: p.code.push_back(Instruction::compare(reg(), reg(), static_cast<CmpOp>(pick(6)), reg())); break;
      case 4: p.code.push_back(Instruction::arith(reg(), reg(), static_cast<BinOp>(pick(9)), reg())); break;
      case 5: p.code.push_back(Instruction::load(reg(), reg())); break;
      case 6: p.code.push_back(Instruction::store(reg(), reg(), pick(2) == 0)); break;
      case 7: p.code.push_back(Instruction::jmp(pick(n))); break;
      case 8: p.code.push_back(Instruction::jcc(reg(), pick(n))); break;
      case 9: p.code.push_back(Instruction::call_ext(pick(p.symbols.size()))); break;
      default: p.code.push_back(Instruction::jr(reg())); break;
    }
  }
  p.code.push_back(Instruction::done());
  p.entry = 0;
  return p;
}

}  // namespace pem::test
