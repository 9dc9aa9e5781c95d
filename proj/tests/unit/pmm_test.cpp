#include <gtest/gtest.h>

#include <random>

#include "pem/pmm.hpp"

namespace pem {
namespace {

TEST(ProbabilisticMemory, MapsAddressesModGamma) {
  ProbabilisticMemory pm(128, 4);
  EXPECT_EQ(pm.cell_of(0x7ffd5418), 0x18u);
  EXPECT_EQ(invalid_load(pm, 0x7ffd5418), pm.initial(0x18));
  EXPECT_EQ(invalid_load(pm, 0x20), pm.initial(0x20));
}

TEST(ProbabilisticMemory, FillIsAPureFunctionOfTheSeed) {
  const ProbabilisticMemory a(65'536, 11);
  const ProbabilisticMemory b(65'536, 11);
  const ProbabilisticMemory c(65'536, 12);
  int differ = 0;
  for (Addr x = 0; x < 1000; ++x) {
    EXPECT_EQ(invalid_load(a, x * 977), invalid_load(b, x * 977));
    differ += invalid_load(a, x) != invalid_load(c, x);
  }
  EXPECT_GT(differ, 990);
}

TEST(ProbabilisticMemory, StoresAliasCongruentAddresses) {
  ProbabilisticMemory pm(128, 1);
  invalid_store(pm, 0x40, 7);
  EXPECT_EQ(invalid_load(pm, 0x40 + 128), 7u);
  EXPECT_EQ(invalid_load(pm, 0x41), pm.initial(0x41));
  invalid_store(pm, 0x10, 1);
  invalid_store(pm, 0x10 + 128, 2);
  invalid_store(pm, 0x10 + 256, 3);
  EXPECT_EQ(invalid_load(pm, 0x10), 3u);
}

// Trace of invalid accesses: (is_store, address, value).
struct Access {
  bool store;
  Addr addr;
  Value value;
};

std::vector<Value> replay(const std::vector<Access>& trace, std::size_t gamma, std::uint64_t seed) {
  ProbabilisticMemory pm(gamma, seed);
  std::vector<Value> loaded;
  for (const Access& a : trace) {
    if (a.store) invalid_store(pm, a.addr, a.value);
    else loaded.push_back(invalid_load(pm, a.addr));
  }
  return loaded;
}

std::vector<Access> random_trace(std::mt19937_64& rng, std::size_t n) {
  std::vector<Access> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({rng() % 3 == 0, rng() % (1u << 20), rng()});
  return t;
}

TEST(ProbabilisticMemory, EquivalencePreserving) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto trace = random_trace(rng, 40);
    const std::uint64_t seed = rng();
    EXPECT_EQ(replay(trace, 65'536, seed), replay(trace, 65'536, seed));
  }
}

TEST(ProbabilisticMemory, DifferenceRevealing) {
  std::mt19937_64 rng(6);
  int revealed = 0;
  const int pairs = 300;
  for (int i = 0; i < pairs; ++i) {
    auto a = random_trace(rng, 40);
    auto b = a;
    // Change one load address.
    std::size_t k = rng() % b.size();
    while (b[k].store) k = (k + 1) % b.size();
    b[k].addr ^= 1 + rng() % 0xffff;
    const std::uint64_t seed = rng();
    revealed += replay(a, 65'536, seed) != replay(b, 65'536, seed);
  }
  EXPECT_GE(revealed, pairs * 99 / 100);
}

TEST(LinkedTraversal, EqualStridesNeverDiverge) {
  EXPECT_EQ(linked_traversal_divergence(0x10, 0x10, 128, 200), 0.0);
}

TEST(LinkedTraversal, DifferentStridesDiverge) {
  EXPECT_GE(linked_traversal_divergence(0x10, 0x18, 65'536, 1000), 0.99);
  EXPECT_GE(linked_traversal_divergence(0x10, 0x18, 128, 1000), 0.95);
}

TEST(Mix64, KnownValues) {
  // splitmix64 reference outputs for state 0 after one and two increments.
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(mix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

}  // namespace
}  // namespace pem
