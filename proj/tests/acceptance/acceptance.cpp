// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pem/corpusgen.hpp"
#include "pem/experiment.hpp"
#include "pem/interp.hpp"
#include "pem/observable.hpp"
#include "pem/pmm.hpp"
#include "pem/theory.hpp"

using namespace pem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = body();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < limit_s, "runtime " + fmt("%.1f", secs) + "s < " + fmt("%.0f", limit_s) + "s");
  failures += !o.pass;
  std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

Outcome theory_exactness() {
  Outcome o;
  for (auto params : {theory::StabilityParams{0.05, 0.05}, {0.1, 0.1}, {0.2, 0.1}}) {
    const auto mc = theory::p_stable_monte_carlo(10, params, 1'000'000, 2024);
    double worst = 0;
    bool decreasing = true;
    for (std::size_t k = 1; k <= 10; ++k) {
      const double exact = theory::p_stable(k, params);
      worst = std::max(worst, std::abs(mc[k - 1].mean - exact) / std::max(mc[k - 1].stddev, 1e-12));
      if (k > 1) decreasing &= exact < theory::p_stable(k - 1, params);
    }
    const std::string tag = "(" + fmt("%.2f", params.t) + "," + fmt("%.2f", params.q) + ")";
    o.require(worst <= 3.0, tag + " max dev " + fmt("%.2f", worst) + " sigma");
    o.require(decreasing, tag + " decreasing");
  }
  return o;
}

Outcome coincided_bound() {
  Outcome o;
  const double e = theory::expected_coincided(400);
  o.require(std::abs(e - 25.0) <= 1.0, "expected_coincided(400) = " + fmt("%.4f", e) + " vs 25 +- 1");
  const auto table = theory::n_k_paths_table(400, 400);
  double sum = 0;
  for (std::size_t k = 0; k <= 400; ++k) sum += table[k][400];
  o.require(std::abs(sum - 400.0) < 1e-6, "sum_k N(k,400) = " + fmt("%.6f", sum));
  return o;
}

Outcome precision_monotonicity() {
  Outcome o;
  double last = -1;
  bool increasing = true;
  std::string values;
  for (std::size_t k : {0, 20, 40, 60, 80}) {
    const double e = theory::expected_pr1({0.85, 400, k, 0.75}, {65, 10, 21, 1.4});
    increasing &= e > last;
    last = e;
    values += (values.empty() ? "" : " ") + fmt("%.4f", e);
  }
  o.require(increasing, "E(PR1) over K=0..80: " + values);
  return o;
}

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

std::vector<Access> random_trace(std::mt19937_64& rng) {
  std::vector<Access> t(20 + rng() % 60);
  for (Access& a : t) a = {rng() % 3 == 0, rng() % (Addr{1} << 32), rng()};
  return t;
}

Outcome pmm_properties() {
  Outcome o;
  std::mt19937_64 rng(404);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto trace = random_trace(rng);
    const std::uint64_t seed = rng();
    equal += replay(trace, 65'536, seed) == replay(trace, 65'536, seed);
  }
  o.require(equal == 1000, "replay equality " + std::to_string(equal) + "/1000");

  int revealed = 0;
  for (int i = 0; i < 1000; ++i) {
    auto a = random_trace(rng);
    auto b = a;
    std::size_t k = rng() % b.size();
    b[k].store = false;
    b[k].addr += 1 + rng() % 0xfffe;  // a different cell mod 64k
    const std::uint64_t seed = rng();
    revealed += replay(a, 65'536, seed) != replay(b, 65'536, seed);
  }
  o.require(revealed >= 990, "difference revealing " + std::to_string(revealed) + "/1000");

  const double diverged = linked_traversal_divergence(0x10, 0x18, 128, 1000);
  o.require(diverged >= 0.95, "list traversal diverges " + fmt("%.3f", diverged));
  o.require(linked_traversal_divergence(0x10, 0x10, 128, 1000) == 0.0, "equal strides agree");
  return o;
}

// ---------------------------------------------------------------------------

const char* kGolden = R"(
.extern puts
main:
  li r2, 0x100000
  ld r3, [r2]
  li r4, 0x18
  ld r5, [r4]
  st [r2], r5
  li r6, 173
  li r7, 0x20
  cmp.gt r8, r6, r7
  jcc r8, yes
  jmp tail
yes:
  done
tail:
  la r9, fin
  jr r9
fin:
  call puts
  done
)";

Outcome rule_conformance() {
  Outcome o;
  const Program p = parse(kGolden);
  const Value seed = 0x5eed;
  const std::uint64_t pm_seed = 77;
  const Interpreter interp(p, {});
  // Force the jcc (ic 9) to fall through although its condition holds.
  const auto path = std::make_shared<const PathDescriptor>(PathDescriptor{}.extended(9, 9));
  std::vector<TraceEvent> trace;
  const RunResult r = interp.run(path, seed, pm_seed, &trace);

  std::vector<std::pair<InstrCount, Rule>> got;
  for (const TraceEvent& e : trace) got.emplace_back(e.ic, e.rule);
  const std::vector<std::pair<InstrCount, Rule>> golden = {
      {0, Rule::Start},   {2, Rule::LogLd},   {2, Rule::LdUd}, {4, Rule::LogIvLd}, {4, Rule::LdIv},
      {5, Rule::LogSt},   {5, Rule::StV},     {8, Rule::LogCC}, {9, Rule::JccGT},   {10, Rule::LogJN},
      {10, Rule::Jmp},    {12, Rule::LogJR},  {12, Rule::Jr},   {13, Rule::CallExt}, {14, Rule::Done}};
  std::string seen;
  for (const auto& [ic, rule] : got) seen += " " + std::to_string(ic) + ":" + std::string(to_string(rule));
  o.require(got == golden, "golden trace of " + std::to_string(golden.size()) + " events" +
                               (got == golden ? "" : ", got" + seen));

  const Value cell = ProbabilisticMemory(65'536, pm_seed).initial(0x18);
  o.require(r.ov.count(ValueKind::MemVal, seed) == 1, "LdUd seed fill");
  o.require(r.ov.count(ValueKind::MemVal, cell) == 2, "LdIv PMM routing");
  o.require(r.ov.count(ValueKind::PredicateSel, 141) == 1, "selectivity |173-0x20| = 141");
  o.require(r.ov.count(ValueKind::ExternSymbol, symbol_hash("puts")) == 1, "extern logged");
  o.require(r.predicates.size() == 1 && !r.predicates[0].outcome, "forced fallthrough");

  // Every logging rule fires once per qualifying instruction, before its
  // interpretation rule, on generated programs.
  bool ordered = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    GenSpec spec;
    spec.rng_seed = s;
    const Program g = generate(spec);
    std::vector<TraceEvent> t;
    Interpreter(g, {}).run(nullptr, standard_seeds()[s % 4], 3, &t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const Opcode op = g.code[t[i].pc].op;
      const bool first_of_ic = i == 0 || t[i - 1].ic != t[i].ic;
      if (!first_of_ic || t[i].rule == Rule::Start) continue;
      const bool logs = op == Opcode::Load || op == Opcode::Store || op == Opcode::Compare || op == Opcode::Jmp ||
                        op == Opcode::Jr;
      const bool is_log = t[i].rule >= Rule::LogLd;
      if (logs != is_log) ordered = false;
      // Compares have no interpretation event of their own.
      if (logs && op != Opcode::Compare && (i + 1 >= t.size() || t[i + 1].ic != t[i].ic || t[i + 1].rule >= Rule::LogLd)) ordered = false;
    }
  }
  o.require(ordered, "logging once per instruction, before interpretation");
  return o;
}

// ---------------------------------------------------------------------------

SignConfig base_config() { return SignConfig{}; }

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0 : s / double(v.size());
}

Outcome sampling_properties(std::size_t workers) {
  Outcome o;
  CorpusSpec cs;
  cs.functions = 200;
  cs.gen.rng_seed = 6;
  const auto pairs = make_pairs(generate_corpus(cs), "O0", "O0", 6);
  std::vector<Program> programs;
  for (const auto& p : pairs) programs.push_back(p.pool);
  double last = 0;
  bool monotone = true;
  std::string sweep;
  double at400 = 0;
  for (std::size_t budget : {1, 20, 50, 100, 200, 400}) {
    SignConfig c = base_config();
    c.sampler.budget = budget;
    std::vector<SignStats> stats;
    sign_all(programs, c, workers, &stats);
    std::vector<double> cov;
    for (const SignStats& s : stats) cov.push_back(s.coverage);
    const double m = mean(cov);
    monotone &= m + 1e-12 >= last;
    last = m;
    at400 = m;
    sweep += (sweep.empty() ? "" : " ") + fmt("%.3f", m);
  }
  o.require(monotone, "coverage sweep " + sweep);
  o.require(at400 >= 0.90, "coverage at 400 = " + fmt("%.3f", at400));
  return o;
}

struct Corpus {
  std::vector<Program> queries;
  std::vector<Program> pool;
};

Corpus end_to_end_corpus() {
  CorpusSpec cs;
  cs.functions = 100;
  cs.gen.rng_seed = 7;
  Corpus c;
  for (const auto& p : make_pairs(generate_corpus(cs), "O0", "O3", 7)) {
    c.pool.push_back(p.pool);
    c.queries.push_back(p.query);
  }
  return c;
}

double pr1(const Corpus& c, const SignConfig& config, std::size_t workers, std::vector<Signature>* q = nullptr,
           std::vector<Signature>* p = nullptr) {
  auto qs = sign_all(c.queries, config, workers);
  auto ps = sign_all(c.pool, config, workers);
  const double v = evaluate(qs, ps, workers).pr1;
  if (q) *q = std::move(qs);
  if (p) *p = std::move(ps);
  return v;
}

}  // namespace

int main() {
  const std::size_t workers = default_workers();
  criterion(1, "theory exactness", 60, theory_exactness);
  criterion(2, "coincided-path bound", 1, coincided_bound);
  criterion(3, "expected-precision monotonicity", 10, precision_monotonicity);
  criterion(4, "PMM properties", 60, pmm_properties);
  criterion(5, "interpreter rule conformance", 10, rule_conformance);
  criterion(6, "sampling properties", 600, [&] { return sampling_properties(workers); });

  const Corpus corpus = end_to_end_corpus();
  std::vector<Signature> pem_queries, pem_pool;
  double pem_pr1 = 0;
  criterion(7, "end-to-end PR@1", 900, [&] {
    Outcome o;
    SignConfig c = base_config();
    pem_pr1 = pr1(corpus, c, workers, &pem_queries, &pem_pool);
    c.sampler.strategy = Strategy::DeterministicExtremes;
    const double det = pr1(corpus, c, workers);
    c.sampler.strategy = Strategy::LastPredicate;
    const double last = pr1(corpus, c, workers);
    o.require(pem_pr1 >= 0.90, "PEM " + fmt("%.3f", pem_pr1) + " >= 0.90");
    o.require(pem_pr1 > det, "PEM > deterministicExtremes " + fmt("%.3f", det));
    o.require(pem_pr1 > last, "PEM > lastPredicate " + fmt("%.3f", last));
    return o;
  });
  criterion(8, "ratio resilience", 600, [&] {
    Outcome o;
    double prev = 1.0;
    bool nonincreasing = true;
    std::string sweep;
    for (std::size_t ratio : {1, 5, 10, 20, 50, 100, 0}) {
      const double v = pr1_at_ratio(pem_queries, pem_pool, ratio);
      nonincreasing &= v <= prev + 1e-12;
      prev = v;
      sweep += (sweep.empty() ? "" : " ") + fmt("%.3f", v);
    }
    o.require(nonincreasing, "PR@1 over ratios 1..inf: " + sweep);
    return o;
  });
  criterion(9, "selectivity-rank stability", 300, [&] {
    Outcome o;
    std::vector<VariantPair> pairs;
    for (std::size_t i = 0; i < corpus.pool.size(); ++i) pairs.push_back({corpus.pool[i], corpus.queries[i]});
    const auto rates = selectivity_rank_study(pairs, standard_seeds());
    std::vector<double> mid;
    double min_rate = 0, max_rate = 0;
    for (const RankRate& r : rates) {
      if (r.label.rfind("mid", 0) == 0) mid.push_back(r.rate());
      if (r.label == "min+0") min_rate = r.rate();
      if (r.label == "max-0") max_rate = r.rate();
    }
    std::sort(mid.begin(), mid.end());
    const double median = mid[mid.size() / 2];
    o.require(min_rate > median, "min-rank " + fmt("%.3f", min_rate) + " > mid median " + fmt("%.3f", median));
    o.require(max_rate > median, "max-rank " + fmt("%.3f", max_rate) + " > mid median");
    return o;
  });
  criterion(10, "memory-model ablation", 900, [&] {
    Outcome o;
    SignConfig c = base_config();
    c.interp.memory_model = MemoryModel::Constant;
    const double constant = pr1(corpus, c, workers);
    c.interp.memory_model = MemoryModel::None;
    const double none = pr1(corpus, c, workers);
    o.require(pem_pr1 > constant, "PMM " + fmt("%.3f", pem_pr1) + " > Const " + fmt("%.3f", constant));
    o.require(constant > none, "Const > No-Mem " + fmt("%.3f", none));
    return o;
  });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
