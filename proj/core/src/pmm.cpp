#include "pem/pmm.hpp"

#include <array>
#include <stdexcept>

namespace pem {

ProbabilisticMemory::ProbabilisticMemory(std::size_t gamma, std::uint64_t rng_seed)
    : gamma_(gamma), rng_seed_(rng_seed) {
  if (gamma == 0) throw std::invalid_argument("probabilistic memory size must be positive");
}

Value ProbabilisticMemory::load(Addr a) const {
  const std::size_t cell = cell_of(a);
  auto it = written_.find(cell);
  return it == written_.end() ? initial(cell) : it->second;
}

void ProbabilisticMemory::store(Addr a, Value v) { written_[cell_of(a)] = v; }

Value invalid_load(const ProbabilisticMemory& pm, Addr a) { return pm.load(a); }
void invalid_store(ProbabilisticMemory& pm, Addr a, Value v) { pm.store(a, v); }

namespace {

std::array<std::size_t, 4> traverse(const ProbabilisticMemory& pm, std::size_t stride) {
  std::array<std::size_t, 4> chain{};
  Addr node = 0;
  chain[0] = pm.cell_of(node);
  for (std::size_t hop = 1; hop < chain.size(); ++hop) {
    node = pm.load(node + stride - 8);
    chain[hop] = pm.cell_of(node);
  }
  return chain;
}

}  // namespace

double linked_traversal_divergence(std::size_t stride_a, std::size_t stride_b, std::size_t gamma,
                                   std::size_t trials, std::uint64_t base_seed) {
  if (trials == 0) return 0.0;
  if (stride_a < 8 || stride_b < 8) throw std::invalid_argument("node stride must be at least 8");
  std::size_t diverged = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const ProbabilisticMemory pm(gamma, base_seed + t);
    if (traverse(pm, stride_a) != traverse(pm, stride_b)) ++diverged;
  }
  return static_cast<double>(diverged) / static_cast<double>(trials);
}

}  // namespace pem
