#pragma once

// Probabilistic memory: a gamma-cell random-filled array that absorbs loads
// and stores to invalid addresses via `address mod gamma`.

#include <cstddef>
#include <cstdint>
#include <unordered_map>

#include "pem/ir.hpp"

namespace pem {

/// splitmix64 finalizer; the counter-based generator behind the PM fill.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class ProbabilisticMemory {
 public:
  ProbabilisticMemory(std::size_t gamma, std::uint64_t rng_seed);

  std::size_t gamma() const { return gamma_; }
  std::uint64_t rng_seed() const { return rng_seed_; }

  /// Cell index an address maps to.
  std::size_t cell_of(Addr a) const { return static_cast<std::size_t>(a % gamma_); }
  /// Initial (random) content of a cell; a pure function of the seed.
  Value initial(std::size_t cell) const { return mix64(rng_seed_ ^ mix64(cell)); }

  Value load(Addr a) const;
  void store(Addr a, Value v);

 private:
  std::size_t gamma_;
  std::uint64_t rng_seed_;
  std::unordered_map<std::size_t, Value> written_;
};

Value invalid_load(const ProbabilisticMemory& pm, Addr a);
void invalid_store(ProbabilisticMemory& pm, Addr a, Value v);

/// Monte-Carlo estimate of how often two null-rooted linked-list traversals
/// whose next pointers sit at offsets strideA-8 and strideB-8 visit different
/// node addresses (mod gamma) within three hops. Trial t uses PM seed
/// base_seed + t.
double linked_traversal_divergence(std::size_t stride_a, std::size_t stride_b, std::size_t gamma,
                                   std::size_t trials, std::uint64_t base_seed = 1);

}  // namespace pem
