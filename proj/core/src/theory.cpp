#include "pem/theory.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pem::theory {

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

struct Kahan {
  double sum = 0;
  double comp = 0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

std::vector<MonteCarloEstimate> finish(const std::vector<std::size_t>& hits, std::size_t trials) {
  std::vector<MonteCarloEstimate> out(hits.size());
  const double n = static_cast<double>(trials);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const double p = static_cast<double>(hits[i]) / n;
    out[i] = {p, std::sqrt(p * (1 - p) / n)};
  }
  return out;
}

}  // namespace

void StabilityParams::check() const {
  if (t < 0 || q < 0 || t + q > 1) throw std::invalid_argument("stability parameters need t,q >= 0 and t+q <= 1");
}

double p_stable(std::size_t k, const StabilityParams& params) {
  params.check();
  if (k == 0) throw std::invalid_argument("predicate rank starts at 1");
  const double r = params.r();
  Kahan sum;
  for (std::size_t i = 0; 2 * i <= k - 1; ++i)
    sum.add(binomial(k - 1, 2 * i) * binomial(2 * i, i) * std::pow(r, double(k - 1 - 2 * i)) *
            std::pow(params.t, double(i)) * std::pow(params.q, double(i)));
  return r * sum.sum;
}

std::vector<MonteCarloEstimate> p_stable_monte_carlo(std::size_t kmax, const StabilityParams& params,
                                                     std::size_t trials, std::uint64_t seed) {
  params.check();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> hits(kmax, 0);
  for (std::size_t n = 0; n < trials; ++n) {
    long balance = 0;  // removed minus inserted among predicates before k
    for (std::size_t k = 0; k < kmax; ++k) {
      const double x = u(rng);
      const bool removed = x < params.t;
      const bool inserted = !removed && x < params.t + params.q;
      if (!removed && !inserted && balance == 0) ++hits[k];
      balance += removed ? 1 : inserted ? -1 : 0;
    }
  }
  return finish(hits, trials);
}

double pc(std::size_t c, std::size_t e, double p0) {
  if (c + e == 0) return 0.0;
  return static_cast<double>(c) / static_cast<double>(c + e) * p0;
}

StateTable::StateTable(std::size_t steps, double p_first, double p_step)
    : steps_(steps), p_(steps + 1, std::vector<double>(steps + 1, 0.0)) {
  if (p_first < 0 || p_first > 1 || p_step < 0 || p_step > 1)
    throw std::invalid_argument("step probabilities must lie in [0,1]");
  for (std::size_t n = 1; n <= steps; ++n) {
    for (std::size_t c = 0; c <= n; ++c) {
      const std::size_t e = n - c;
      double v;
      if (c == 1 && e == 0) v = p_first;
      else if (c == 0) v = 1.0 - p_first;
      else {
        v = pc(c - 1, e, p_step) * p_[c - 1][e];
        if (e > 0) v += (1.0 - pc(c, e - 1, p_step)) * p_[c][e - 1];
      }
      p_[c][e] = v;
    }
  }
}

double StateTable::operator()(long c, long e) const {
  if (c < 0 || e < 0) return 0.0;
  if (static_cast<std::size_t>(c + e) > steps_) throw std::out_of_range("state beyond table");
  return p_[c][e];
}

double StateTable::row_sum(std::size_t n) const {
  Kahan sum;
  for (std::size_t c = 0; c <= n; ++c) sum.add(p_[c][n - c]);
  return sum.sum;
}

double p_state(long c, long e, double p0) {
  if (c < 0 || e < 0) return 0.0;
  return StateTable(static_cast<std::size_t>(c + e), p0, p0)(c, e);
}

double p_state_naive(long c, long e, double p0) {
  if (c < 0 || e < 0) return 0.0;
  if (c == 1 && e == 0) return p0;
  if (c == 0 && e >= 1) return 1.0 - p0;
  if (c == 0 && e == 0) return 0.0;
  const double a = c >= 1 ? pc(c - 1, e, p0) * p_state_naive(c - 1, e, p0) : 0.0;
  const double b = e >= 1 ? (1.0 - pc(c, e - 1, p0)) * p_state_naive(c, e - 1, p0) : 0.0;
  return a + b;
}

std::vector<MonteCarloEstimate> p_state_monte_carlo(std::size_t steps, double p0, std::size_t trials,
                                                    std::uint64_t seed) {
  if (steps == 0) throw std::invalid_argument("walk needs at least one step");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> hits(steps + 1, 0);
  for (std::size_t n = 0; n < trials; ++n) {
    std::size_t c = u(rng) < p0 ? 1 : 0;
    std::size_t e = 1 - c;
    for (std::size_t s = 1; s < steps; ++s) {
      if (u(rng) < pc(c, e, p0)) ++c;
      else ++e;
    }
    ++hits[c];
  }
  return finish(hits, trials);
}

void ParetoParams::check() const {
  if (i_min < 1) throw std::invalid_argument("i_min must be at least 1");
}

void StepModelParams::check() const {
  if (p0 < 0 || p0 > 1 || phi < 0 || phi > 1) throw std::invalid_argument("p0 and phi must lie in [0,1]");
  if (extra >= budget) throw std::invalid_argument("extra steps must be below the budget");
}

double pr1(double i, const ParetoParams& pareto) {
  if (i <= pareto.i_min) return 0.0;
  return pareto.r0 + pareto.delta * (1.0 - std::pow(pareto.i_min / i, pareto.alpha));
}

double boosted_p(const StepModelParams& step) {
  step.check();
  const double k = static_cast<double>(step.extra);
  const double b = static_cast<double>(step.budget);
  return step.p0 + k / (b - k) * step.phi * (1.0 - step.p0);
}

double expected_pr1(const StepModelParams& step, const ParetoParams& pareto) {
  pareto.check();
  const std::size_t n = step.budget - step.extra;
  const StateTable table(n, step.p0, boosted_p(step));
  Kahan sum;
  for (std::size_t i = 0; i <= n; ++i) sum.add(table(long(i), long(n - i)) * pr1(double(i), pareto));
  return sum.sum;
}

double p_same(std::size_t k) { return std::ldexp(1.0, -static_cast<int>(k)); }

std::vector<std::vector<double>> n_k_paths_table(std::size_t kmax, std::size_t steps) {
  std::vector<std::vector<double>> n(kmax + 1, std::vector<double>(steps + 1, 0.0));
  for (std::size_t i = 1; i <= steps; ++i) n[0][i] = 1.0;
  for (std::size_t k = 1; k <= kmax; ++k)
    for (std::size_t i = 2; i <= steps; ++i) n[k][i] = n[k][i - 1] + n[k - 1][i - 1] / double(i - 1);
  return n;
}

double n_k_paths(std::size_t k, std::size_t i) {
  if (i == 0) throw std::invalid_argument("path count index starts at 1");
  return n_k_paths_table(k, i)[k][i];
}

double expected_coincided(std::size_t budget) {
  if (budget == 0) return 0.0;
  const auto n = n_k_paths_table(budget, budget);
  Kahan sum;
  for (std::size_t k = 0; k <= budget; ++k) sum.add(p_same(k) * n[k][budget]);
  return sum.sum;
}

}  // namespace pem::theory
