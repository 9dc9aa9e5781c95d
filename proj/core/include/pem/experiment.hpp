#pragma once

// End-to-end pipeline: signing programs, ranking, PR@k evaluation and the
// selectivity-rank stability study.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pem/analyzer.hpp"
#include "pem/interp.hpp"
#include "pem/ir.hpp"
#include "pem/sampler.hpp"
#include "pem/transform.hpp"

namespace pem {

struct SignConfig {
  InterpConfig interp;
  SamplerConfig sampler;
  NormalizeConfig normalize;
  std::vector<Value> seeds = standard_seeds();
  /// Comparison-level seed of the probabilistic memory; shared by every
  /// program signed in one experiment.
  std::uint64_t pm_seed = 0x70b5eed;
};

/// PM seed used for runs on one seed value.
std::uint64_t run_pm_seed(std::uint64_t comparison_seed, Value seed);

struct SignStats {
  double coverage = 0;  // union over all seed values
  std::size_t runs = 0;
};

Signature sign(const Program& program, const SignConfig& config, SignStats* stats = nullptr);

/// Worker count: PEM_WORKERS if set, else the hardware concurrency.
std::size_t default_workers();

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

std::vector<Signature> sign_all(const std::vector<Program>& programs, const SignConfig& config,
                                std::size_t workers, std::vector<SignStats>* stats = nullptr);

std::vector<Ranking> rank_all(const std::vector<Signature>& queries, const std::vector<Signature>& pool,
                              std::size_t workers);

struct EvalReport {
  std::size_t queries = 0;
  std::size_t pool = 0;
  double pr1 = 0, pr3 = 0, pr5 = 0;
  double query_coverage = 0;  // mean, when known
  double pool_coverage = 0;
};

/// Each query's ground truth is the pool entry with the same program name.
EvalReport evaluate(const std::vector<Signature>& queries, const std::vector<Signature>& pool,
                    std::size_t workers);

/// PR@1 where each query competes against its truth plus the first `ratio`
/// negatives of a fixed per-query permutation of the rest of the pool.
/// ratio == 0 means all negatives.
double pr1_at_ratio(const std::vector<Signature>& queries, const std::vector<Signature>& pool, std::size_t ratio,
                    std::uint64_t shuffle_seed = 17);

struct VariantPair {
  Program pool;   // reference build
  Program query;  // transformed build
};

/// Applies the two presets to every base program, with per-program plan seeds.
std::vector<VariantPair> make_pairs(const std::vector<Program>& bases, const std::string& pool_plan,
                                    const std::string& query_plan, std::uint64_t plan_seed = 1);

struct RankRate {
  std::string label;  // "min+k", "mid-k"/"mid+k" or "max-k"
  std::size_t matches = 0;
  std::size_t total = 0;
  double rate() const { return total ? static_cast<double>(matches) / static_cast<double>(total) : 0.0; }
};

/// Match rates of predicate instances at extreme and middle selectivity ranks
/// between faithful traces of each pair, matched by (origin, occurrence).
std::vector<RankRate> selectivity_rank_study(const std::vector<VariantPair>& pairs,
                                             const std::vector<Value>& seeds, const InterpConfig& config = {},
                                             std::size_t window = 5);

}  // namespace pem
