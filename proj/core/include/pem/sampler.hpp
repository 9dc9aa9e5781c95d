#pragma once

// Probabilistic path sampling: pick a predicate instance from the candidate
// pool, flip it, interpret, repeat.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "pem/interp.hpp"

namespace pem {

enum class Strategy : std::uint8_t { Probabilistic, DeterministicExtremes, LastPredicate };
std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);

struct SamplerConfig {
  std::size_t budget = 400;
  double beta_alpha = 0.03;
  double beta_beta = 0.03;
  std::uint64_t rng_seed = 0;
  Strategy strategy = Strategy::Probabilistic;
  /// Keep each run's predicate list in the returned results.
  bool keep_predicates = false;

  void check() const;
};

/// Maps a Beta draw to a rank percentile, squashing the outer 5% tails.
double beta_percentile(double i);

/// The run's descriptor extended with the other successor at the instance's ic.
PathDescriptor flip(const PredicateInstance& instance);

class EmptyPoolError : public std::runtime_error {
 public:
  EmptyPoolError() : std::runtime_error("candidate pool is empty") {}
};

/// Flip candidates ordered by (selectivity, run id, ic).
class CandidatePool {
 public:
  CandidatePool();
  ~CandidatePool();
  CandidatePool(CandidatePool&&) noexcept;
  CandidatePool& operator=(CandidatePool&&) noexcept;

  /// Adds the flippable instances of `run` with ic > after_ic, keeping at most
  /// `per_predicate` instances of each static predicate over the whole run.
  void add_run(std::uint32_t run_id, const RunResult& run, InstrCount after_ic,
               std::size_t per_predicate);
  void add(std::uint32_t run_id, PredicateInstance instance);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  /// Entry at a rank of the selectivity-sorted view.
  const PredicateInstance& at_rank(std::size_t rank) const;
  std::uint32_t run_at_rank(std::size_t rank) const;
  PredicateInstance take_rank(std::size_t rank);
  /// Last remaining entry of the most recent run that still has entries.
  PredicateInstance take_last_of_latest_run();
  /// Latest-run-first, last-first scan for an entry satisfying `wanted`;
  /// falls back to take_last_of_latest_run() when none does.
  PredicateInstance take_last_matching(const std::function<bool(const PredicateInstance&)>& wanted);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

using BranchSet = std::set<std::pair<CodeIndex, bool>>;

/// Selects (and removes) the next instance to flip.
class Selector {
 public:
  explicit Selector(const SamplerConfig& config, std::uint64_t stream);
  /// `covered` holds the (predicate, outcome) edges seen so far; the
  /// last-predicate strategy prefers instances whose other edge is not in it.
  PredicateInstance select(CandidatePool& pool, const BranchSet* covered = nullptr);
  /// Rank that a probabilistic draw maps to in a pool of n entries.
  std::size_t draw_rank(std::size_t n);

 private:
  SamplerConfig config_;
  std::mt19937_64 rng_;
  bool next_max_ = false;
};

/// Runs exactly budget + 1 interpretations unless the pool empties first.
/// runs[0] is the faithful seed path.
std::vector<RunResult> sample(const Interpreter& interp, Value seed, const SamplerConfig& config,
                              std::uint64_t pm_seed);

double coverage(const std::vector<RunResult>& runs, std::size_t block_count);

}  // namespace pem
