#pragma once

// Analytic models of path-sampling stability and precision, with
// Monte-Carlo counterparts.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pem::theory {

struct StabilityParams {
  double t = 0.1;  // probability a predicate is eliminated
  double q = 0.1;  // probability a predicate is inserted next to it
  double r() const { return 1.0 - t - q; }
  void check() const;
};

/// Probability that the k-th smallest-selectivity predicate keeps its rank.
double p_stable(std::size_t k, const StabilityParams& params);

struct MonteCarloEstimate {
  double mean = 0;
  double stddev = 0;  // standard error of the mean
};

/// Simulates the remove/insert process; entry k-1 estimates p_stable(k).
std::vector<MonteCarloEstimate> p_stable_monte_carlo(std::size_t kmax, const StabilityParams& params,
                                                     std::size_t trials, std::uint64_t seed);

/// Probability of selecting the next predicate correctly in state (c, e).
double pc(std::size_t c, std::size_t e, double p0);

/// Probabilities of all states (c, e) with c + e <= steps, where the per-step
/// success probability is c/(c+e) * p_step and the first step succeeds with
/// p_first.
class StateTable {
 public:
  StateTable(std::size_t steps, double p_first, double p_step);
  double operator()(long c, long e) const;
  std::size_t steps() const { return steps_; }
  /// Sum over c of P(c, n - c), Kahan-compensated.
  double row_sum(std::size_t n) const;

 private:
  std::size_t steps_;
  std::vector<std::vector<double>> p_;  // p_[c][e]
};

double p_state(long c, long e, double p0);
/// Direct recursion without memoization; exponential, for small inputs only.
double p_state_naive(long c, long e, double p0);

/// Fraction of walks of `steps` steps that end in each state c (e = steps - c).
std::vector<MonteCarloEstimate> p_state_monte_carlo(std::size_t steps, double p0, std::size_t trials,
                                                    std::uint64_t seed);

struct ParetoParams {
  double r0 = 65;
  double i_min = 10;
  double delta = 21;
  double alpha = 1.4;
  void check() const;
};

struct StepModelParams {
  double p0 = 0.85;
  std::size_t budget = 400;
  std::size_t extra = 0;  // K, additional sampling steps
  double phi = 0.75;
  void check() const;
};

double pr1(double i, const ParetoParams& pareto);
/// Per-step success probability once K extra steps are spent.
double boosted_p(const StepModelParams& step);
double expected_pr1(const StepModelParams& step, const ParetoParams& pareto);

double p_same(std::size_t k);
/// table[k][i] for 0 <= k <= kmax, 0 <= i <= steps (column 0 unused).
std::vector<std::vector<double>> n_k_paths_table(std::size_t kmax, std::size_t steps);
double n_k_paths(std::size_t k, std::size_t i);
double expected_coincided(std::size_t budget);

}  // namespace pem::theory
