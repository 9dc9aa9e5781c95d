#include "pem/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <ext/pb_ds/assoc_container.hpp>
#include <ext/pb_ds/tree_policy.hpp>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>

#include <boost/math/distributions/beta.hpp>

#include "pem/pmm.hpp"

namespace pem {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Probabilistic: return "pem";
    case Strategy::DeterministicExtremes: return "det";
    case Strategy::LastPredicate: return "lastpred";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "pem" || name == "probabilistic") return Strategy::Probabilistic;
  if (name == "det" || name == "deterministic-extremes") return Strategy::DeterministicExtremes;
  if (name == "lastpred" || name == "last-predicate") return Strategy::LastPredicate;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

void SamplerConfig::check() const {
  if (budget == 0) throw std::invalid_argument("sampling budget must be at least 1");
  if (!(beta_alpha > 0) || !(beta_beta > 0)) throw std::invalid_argument("beta shapes must be positive");
}

double beta_percentile(double i) {
  const double shifted = std::clamp(i - 0.05, 0.0, 1.0);
  return std::clamp(shifted * 10.0 / 9.0, 0.0, 1.0);
}

PathDescriptor flip(const PredicateInstance& instance) {
  const PathDescriptor base = instance.path ? *instance.path : PathDescriptor{};
  return base.extended(instance.ic, instance.other_branch());
}

namespace {

using PoolKey = std::tuple<Value, std::uint32_t, InstrCount>;
using OrderedPool = __gnu_pbds::tree<PoolKey, std::size_t, std::less<PoolKey>, __gnu_pbds::rb_tree_tag,
                                     __gnu_pbds::tree_order_statistics_node_update>;

}  // namespace

struct CandidatePool::Impl {
  OrderedPool tree;
  std::vector<PredicateInstance> storage;
  std::vector<std::size_t> free_slots;
  // Keys in insertion order, per run, for the last-predicate strategy.
  std::vector<std::pair<std::uint32_t, std::vector<PoolKey>>> by_run;

  PredicateInstance remove(OrderedPool::iterator it) {
    const std::size_t slot = it->second;
    tree.erase(it);
    free_slots.push_back(slot);
    return std::move(storage[slot]);
  }
};

CandidatePool::CandidatePool() : impl_(std::make_unique<Impl>()) {}
CandidatePool::~CandidatePool() = default;
CandidatePool::CandidatePool(CandidatePool&&) noexcept = default;
CandidatePool& CandidatePool::operator=(CandidatePool&&) noexcept = default;

void CandidatePool::add(std::uint32_t run_id, PredicateInstance instance) {
  const PoolKey key{instance.selectivity, run_id, instance.ic};
  std::size_t slot;
  if (!impl_->free_slots.empty()) {
    slot = impl_->free_slots.back();
    impl_->free_slots.pop_back();
    impl_->storage[slot] = std::move(instance);
  } else {
    slot = impl_->storage.size();
    impl_->storage.push_back(std::move(instance));
  }
  if (!impl_->tree.insert({key, slot}).second) {
    impl_->free_slots.push_back(slot);
    return;
  }
  if (impl_->by_run.empty() || impl_->by_run.back().first != run_id) impl_->by_run.push_back({run_id, {}});
  impl_->by_run.back().second.push_back(key);
}

void CandidatePool::add_run(std::uint32_t run_id, const RunResult& run, InstrCount after_ic,
                            std::size_t per_predicate) {
  std::unordered_map<CodeIndex, std::size_t> seen;
  for (const PredicateInstance& p : run.predicates) {
    if (!p.flippable) continue;
    std::size_t& n = seen[p.predicate];
    if (n >= per_predicate) continue;
    ++n;
    if (p.ic > after_ic) add(run_id, p);
  }
}

std::size_t CandidatePool::size() const { return impl_->tree.size(); }

const PredicateInstance& CandidatePool::at_rank(std::size_t rank) const {
  if (rank >= size()) throw std::out_of_range("pool rank out of range");
  return impl_->storage[impl_->tree.find_by_order(rank)->second];
}

std::uint32_t CandidatePool::run_at_rank(std::size_t rank) const {
  if (rank >= size()) throw std::out_of_range("pool rank out of range");
  return std::get<1>(impl_->tree.find_by_order(rank)->first);
}

PredicateInstance CandidatePool::take_rank(std::size_t rank) {
  if (empty()) throw EmptyPoolError();
  if (rank >= size()) throw std::out_of_range("pool rank out of range");
  return impl_->remove(impl_->tree.find_by_order(rank));
}

PredicateInstance CandidatePool::take_last_of_latest_run() {
  auto& runs = impl_->by_run;
  while (!runs.empty()) {
    auto& keys = runs.back().second;
    while (!keys.empty()) {
      const PoolKey key = keys.back();
      keys.pop_back();
      auto it = impl_->tree.find(key);
      if (it != impl_->tree.end()) return impl_->remove(it);
    }
    runs.pop_back();
  }
  throw EmptyPoolError();
}

PredicateInstance CandidatePool::take_last_matching(const std::function<bool(const PredicateInstance&)>& wanted) {
  auto& runs = impl_->by_run;
  for (auto run = runs.rbegin(); run != runs.rend(); ++run) {
    auto& keys = run->second;
    for (std::size_t k = keys.size(); k-- > 0;) {
      auto it = impl_->tree.find(keys[k]);
      if (it == impl_->tree.end()) {
        keys.erase(keys.begin() + static_cast<std::ptrdiff_t>(k));
        continue;
      }
      if (!wanted(impl_->storage[it->second])) continue;
      keys.erase(keys.begin() + static_cast<std::ptrdiff_t>(k));
      return impl_->remove(it);
    }
  }
  return take_last_of_latest_run();
}

Selector::Selector(const SamplerConfig& config, std::uint64_t stream)
    : config_(config), rng_(mix64(config.rng_seed ^ mix64(stream))) {}

std::size_t Selector::draw_rank(std::size_t n) {
  const boost::math::beta_distribution<double> dist(config_.beta_alpha, config_.beta_beta);
  // 53-bit uniform in (0, 1); the quantile is undefined at the end points.
  double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  u = std::clamp(u, 0x1.0p-60, 1.0 - 0x1.0p-53);
  const double i = boost::math::quantile(dist, u);
  const double p = beta_percentile(i);
  return std::min(n - 1, static_cast<std::size_t>(std::floor(p * static_cast<double>(n - 1))));
}

PredicateInstance Selector::select(CandidatePool& pool, const BranchSet* covered) {
  if (pool.empty()) throw EmptyPoolError();
  switch (config_.strategy) {
    case Strategy::Probabilistic: return pool.take_rank(draw_rank(pool.size()));
    case Strategy::DeterministicExtremes: {
      const std::size_t rank = next_max_ ? pool.size() - 1 : 0;
      next_max_ = !next_max_;
      return pool.take_rank(rank);
    }
    case Strategy::LastPredicate:
      if (covered == nullptr) return pool.take_last_of_latest_run();
      return pool.take_last_matching(
          [&](const PredicateInstance& p) { return covered->count({p.predicate, !p.outcome}) == 0; });
  }
  throw std::logic_error("unhandled strategy");
}

std::vector<RunResult> sample(const Interpreter& interp, Value seed, const SamplerConfig& config,
                              std::uint64_t pm_seed) {
  config.check();
  const std::size_t per_predicate = interp.config().pred_instance_flips;
  std::vector<RunResult> runs;
  runs.reserve(config.budget + 1);
  CandidatePool pool;
  Selector selector(config, seed);

  BranchSet covered;
  auto note_edges = [&](const RunResult& r) {
    for (const PredicateInstance& p : r.predicates) covered.insert({p.predicate, p.outcome});
  };

  runs.push_back(interp.run(std::make_shared<const PathDescriptor>(), seed, pm_seed));
  note_edges(runs.back());
  pool.add_run(0, runs.back(), 0, per_predicate);
  if (!config.keep_predicates) runs.back().predicates = {};

  for (std::size_t step = 0; step < config.budget && !pool.empty(); ++step) {
    const PredicateInstance chosen = selector.select(pool, &covered);
    auto path = std::make_shared<const PathDescriptor>(flip(chosen));
    const auto run_id = static_cast<std::uint32_t>(runs.size());
    runs.push_back(interp.run(path, seed, pm_seed));
    note_edges(runs.back());
    pool.add_run(run_id, runs.back(), chosen.ic, per_predicate);
    if (!config.keep_predicates) runs.back().predicates = {};
  }
  return runs;
}

double coverage(const std::vector<RunResult>& runs, std::size_t block_count) {
  if (runs.empty() || block_count == 0) return 0.0;
  std::vector<char> hit(block_count, 0);
  for (const RunResult& r : runs)
    for (BlockId b : r.covered_blocks)
      if (b < block_count) hit[b] = 1;
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(block_count);
}

}  // namespace pem
