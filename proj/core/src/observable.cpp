#include "pem/observable.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace pem {

namespace {
constexpr std::array<std::string_view, kValueKindCount> kKindNames = {
    "mem_addr", "mem_val", "mem_string", "jump_target", "predicate_sel", "extern_symbol"};
}

std::string_view to_string(ValueKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ValueKind value_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<ValueKind>(i);
  throw std::invalid_argument("unknown value kind '" + std::string(name) + "'");
}

void ObservableValues::merge(const ObservableValues& other) {
  for (const auto& [k, n] : other.counts_) counts_[k] += n;
}

std::uint64_t ObservableValues::count(ValueKind kind, Value value) const {
  auto it = counts_.find({kind, value});
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t ObservableValues::total() const {
  std::uint64_t t = 0;
  for (const auto& [k, n] : counts_) t += n;
  return t;
}

std::vector<std::pair<ValueKey, std::uint64_t>> ObservableValues::sorted() const {
  std::vector<std::pair<ValueKey, std::uint64_t>> out(counts_.begin(), counts_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::uint64_t symbol_hash(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void log_load(ObservableValues& ov, Addr addr, Value value) {
  ov.add(ValueKind::MemAddr, addr);
  ov.add(ValueKind::MemVal, value);
}

void log_store(ObservableValues& ov, Addr addr, Value value, bool string_store) {
  ov.add(ValueKind::MemAddr, addr);
  ov.add(string_store ? ValueKind::MemString : ValueKind::MemVal, value);
}

void log_jump(ObservableValues& ov, Value target) { ov.add(ValueKind::JumpTarget, target); }

void log_extern(ObservableValues& ov, std::string_view symbol) {
  ov.add(ValueKind::ExternSymbol, symbol_hash(symbol));
}

Value log_compare(ObservableValues& ov, CmpOp /*op*/, Value lhs, Value rhs) {
  const Value sel = selectivity(lhs, rhs);
  ov.add(ValueKind::PredicateSel, sel);
  return sel;
}

}  // namespace pem
