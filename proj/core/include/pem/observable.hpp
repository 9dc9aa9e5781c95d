#pragma once

// Observable-value statistics and the logging rules that feed them.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pem/ir.hpp"

namespace pem {

enum class ValueKind : std::uint8_t {
  MemAddr,
  MemVal,
  MemString,  // value written by a string store
  JumpTarget,
  PredicateSel,
  ExternSymbol,
};

inline constexpr std::size_t kValueKindCount = 6;

std::string_view to_string(ValueKind kind);
ValueKind value_kind_from_string(std::string_view name);

struct ValueKey {
  ValueKind kind = ValueKind::MemVal;
  Value value = 0;
  friend constexpr auto operator<=>(const ValueKey&, const ValueKey&) = default;
};

struct ValueKeyHash {
  std::size_t operator()(const ValueKey& k) const noexcept {
    std::uint64_t x = k.value ^ (static_cast<std::uint64_t>(k.kind) * 0x9e3779b97f4a7c15ULL);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return static_cast<std::size_t>(x);
  }
};

/// Multiset Value -> count, tagged by kind.
class ObservableValues {
 public:
  using Map = std::unordered_map<ValueKey, std::uint64_t, ValueKeyHash>;

  void add(ValueKind kind, Value value, std::uint64_t n = 1) { counts_[{kind, value}] += n; }
  void merge(const ObservableValues& other);

  std::uint64_t count(ValueKind kind, Value value) const;
  std::uint64_t total() const;
  std::size_t distinct() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }
  const Map& counts() const { return counts_; }
  /// Entries sorted by key; used for canonical output.
  std::vector<std::pair<ValueKey, std::uint64_t>> sorted() const;

  friend bool operator==(const ObservableValues& a, const ObservableValues& b) {
    return a.counts_ == b.counts_;
  }

 private:
  Map counts_;
};

/// |lhs - rhs|, the distance of a comparison instance to its decision boundary.
constexpr Value selectivity(Value lhs, Value rhs) { return lhs > rhs ? lhs - rhs : rhs - lhs; }

/// FNV-1a hash of an external symbol name; the value logged for CallExt.
std::uint64_t symbol_hash(std::string_view name);

void log_load(ObservableValues& ov, Addr addr, Value value);
void log_store(ObservableValues& ov, Addr addr, Value value, bool string_store = false);
void log_jump(ObservableValues& ov, Value target);
void log_extern(ObservableValues& ov, std::string_view symbol);
/// Logs and returns the selectivity of a comparison. The operator does not
/// affect the logged value.
Value log_compare(ObservableValues& ov, CmpOp op, Value lhs, Value rhs);

}  // namespace pem
