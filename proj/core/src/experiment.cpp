#include "pem/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "pem/pmm.hpp"

namespace pem {

std::uint64_t run_pm_seed(std::uint64_t comparison_seed, Value seed) {
  return mix64(comparison_seed ^ mix64(seed));
}

Signature sign(const Program& program, const SignConfig& config, SignStats* stats) {
  const Interpreter interp(program, config.interp);
  ObservableValues total;
  std::vector<char> covered(interp.cfg().blocks.size(), 0);
  std::size_t runs = 0;
  for (Value seed : config.seeds) {
    const auto results = sample(interp, seed, config.sampler, run_pm_seed(config.pm_seed, seed));
    runs += results.size();
    for (const RunResult& r : results) {
      total.merge(r.ov);
      for (BlockId b : r.covered_blocks) covered[b] = 1;
    }
  }
  if (stats) {
    stats->runs = runs;
    stats->coverage = covered.empty() ? 0.0
                                      : static_cast<double>(std::count(covered.begin(), covered.end(), 1)) /
                                            static_cast<double>(covered.size());
  }
  NormalizeConfig norm = config.normalize;
  norm.string_len = config.interp.string_len;
  return normalize(total, program.name, norm);
}

std::size_t default_workers() {
  if (const char* env = std::getenv("PEM_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Signature> sign_all(const std::vector<Program>& programs, const SignConfig& config,
                                std::size_t workers, std::vector<SignStats>* stats) {
  std::vector<Signature> out(programs.size());
  if (stats) stats->assign(programs.size(), {});
  parallel_for(programs.size(), workers,
               [&](std::size_t i) { out[i] = sign(programs[i], config, stats ? &(*stats)[i] : nullptr); });
  return out;
}

std::vector<Ranking> rank_all(const std::vector<Signature>& queries, const std::vector<Signature>& pool,
                              std::size_t workers) {
  std::vector<Ranking> out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t i) { out[i] = rank(queries[i], pool); });
  return out;
}

EvalReport evaluate(const std::vector<Signature>& queries, const std::vector<Signature>& pool,
                    std::size_t workers) {
  std::map<std::string, std::size_t> names;
  for (const Signature& s : pool) ++names[s.program_name];
  std::vector<std::string> truth;
  for (const Signature& q : queries) {
    if (names[q.program_name] != 1)
      throw std::invalid_argument("query '" + q.program_name + "' needs exactly one pool entry with its name");
    truth.push_back(q.program_name);
  }
  const auto rankings = rank_all(queries, pool, workers);
  EvalReport r;
  r.queries = queries.size();
  r.pool = pool.size();
  r.pr1 = pr_at_k(rankings, truth, 1);
  r.pr3 = pr_at_k(rankings, truth, 3);
  r.pr5 = pr_at_k(rankings, truth, 5);
  return r;
}

double pr1_at_ratio(const std::vector<Signature>& queries, const std::vector<Signature>& pool, std::size_t ratio,
                    std::uint64_t shuffle_seed) {
  if (queries.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Signature* truth = nullptr;
    std::vector<const Signature*> negatives;
    for (const Signature& s : pool) {
      if (s.program_name == queries[q].program_name) truth = &s;
      else negatives.push_back(&s);
    }
    if (!truth) throw std::invalid_argument("query '" + queries[q].program_name + "' has no ground truth in the pool");
    std::mt19937_64 rng(mix64(shuffle_seed ^ mix64(q)));
    std::shuffle(negatives.begin(), negatives.end(), rng);
    if (ratio > 0 && ratio < negatives.size()) negatives.resize(ratio);
    negatives.push_back(truth);
    const Ranking ranking = rank(queries[q], negatives);
    if (ranking.front().first == truth->program_name) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::vector<VariantPair> make_pairs(const std::vector<Program>& bases, const std::string& pool_plan,
                                    const std::string& query_plan, std::uint64_t plan_seed) {
  std::vector<VariantPair> out;
  out.reserve(bases.size());
  for (std::size_t i = 0; i < bases.size(); ++i) {
    const std::uint64_t s = mix64(plan_seed ^ mix64(i));
    out.push_back({apply(bases[i], TransformPlan::preset(pool_plan, s)).program,
                   apply(bases[i], TransformPlan::preset(query_plan, s ^ 0xa5a5a5a5ULL)).program});
  }
  return out;
}

namespace {

struct Ranked {
  std::vector<std::pair<std::uint32_t, std::size_t>> keys;  // (origin, occurrence), by rank
};

Ranked ranked_predicates(const Interpreter& interp, Value seed, std::uint64_t pm_seed) {
  const RunResult r = interp.run(nullptr, seed, pm_seed);
  const Program& p = interp.program();
  std::map<std::uint32_t, std::size_t> seen;
  std::vector<std::tuple<Value, std::size_t, std::pair<std::uint32_t, std::size_t>>> items;
  for (std::size_t i = 0; i < r.predicates.size(); ++i) {
    const std::uint32_t origin = p.origin_of(r.predicates[i].predicate);
    items.emplace_back(r.predicates[i].selectivity, i, std::make_pair(origin, seen[origin]++));
  }
  std::sort(items.begin(), items.end());
  Ranked out;
  for (const auto& it : items) out.keys.push_back(std::get<2>(it));
  return out;
}

}  // namespace

std::vector<RankRate> selectivity_rank_study(const std::vector<VariantPair>& pairs, const std::vector<Value>& seeds,
                                             const InterpConfig& config, std::size_t window) {
  const long half = static_cast<long>(window / 2);
  std::vector<RankRate> rates;
  for (std::size_t k = 0; k < window; ++k) rates.push_back({"min+" + std::to_string(k)});
  for (long d = -half; d <= half; ++d) rates.push_back({std::string("mid") + (d < 0 ? "-" : "+") + std::to_string(std::abs(d))});
  for (std::size_t k = window; k-- > 0;) rates.push_back({"max-" + std::to_string(k)});

  constexpr std::uint32_t kInserted = ProgramBuilder::kNoOrigin;
  auto tally = [](RankRate& rate, const Ranked& a, const Ranked& b, long ia, long ib) {
    if (ia < 0 || ib < 0 || ia >= static_cast<long>(a.keys.size()) || ib >= static_cast<long>(b.keys.size())) return;
    ++rate.total;
    if (a.keys[ia] == b.keys[ib] && a.keys[ia].first != kInserted) ++rate.matches;
  };

  for (const VariantPair& pair : pairs) {
    const Interpreter ia(pair.pool, config);
    const Interpreter ib(pair.query, config);
    for (Value seed : seeds) {
      const std::uint64_t pm = run_pm_seed(0x70b5eed, seed);
      const Ranked a = ranked_predicates(ia, seed, pm);
      const Ranked b = ranked_predicates(ib, seed, pm);
      const long na = static_cast<long>(a.keys.size());
      const long nb = static_cast<long>(b.keys.size());
      std::size_t slot = 0;
      for (std::size_t k = 0; k < window; ++k, ++slot) tally(rates[slot], a, b, long(k), long(k));
      for (long d = -half; d <= half; ++d, ++slot) tally(rates[slot], a, b, na / 2 + d, nb / 2 + d);
      for (std::size_t k = window; k-- > 0; ++slot) tally(rates[slot], a, b, na - 1 - long(k), nb - 1 - long(k));
    }
  }
  return rates;
}

}  // namespace pem
