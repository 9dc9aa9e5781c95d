#pragma once

// Deterministic generator of random toy-IR functions with a target size and
// branchiness.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pem/ir.hpp"

namespace pem {

struct GenSpec {
  std::size_t blocks = 150;
  double connectivity = 3.0;  // ignored for single-block programs
  std::size_t loops = 4;      // counted loops plus list walks
  double extern_density = 0.15;
  std::uint64_t rng_seed = 0;
  double tolerance = 0.10;
  std::size_t max_attempts = 200;

  void check() const;
};

class GenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenMetrics {
  std::size_t blocks = 0;
  double connectivity = 0;
};

GenMetrics measure(const Program& program);
bool within_spec(const GenMetrics& m, const GenSpec& spec);

Program generate(const GenSpec& spec, const std::string& name = "f0");

/// Near-twin functions: the same skeleton, with `perturbed` regions of each
/// variant after the first re-rolled (constants, strides, symbols).
std::vector<Program> generate_family(const GenSpec& spec, std::size_t variants, std::size_t perturbed,
                                     const std::string& prefix);

struct CorpusSpec {
  GenSpec gen;
  std::size_t functions = 100;
  std::size_t family_size = 4;
  std::size_t perturbed = 2;
};

/// `functions` programs named f<family>_<variant>.
std::vector<Program> generate_corpus(const CorpusSpec& spec);

}  // namespace pem
