// pem: assemble, transform, sample, sign, compare and evaluate toy-IR
// programs, and tabulate the analytic models.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pem/analyzer.hpp"
#include "pem/corpusgen.hpp"
#include "pem/experiment.hpp"
#include "pem/interp.hpp"
#include "pem/io.hpp"
#include "pem/ir.hpp"
#include "pem/sampler.hpp"
#include "pem/theory.hpp"
#include "pem/transform.hpp"

namespace fs = std::filesystem;
using namespace pem;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kInput = 2, kInternal = 3 };

// Thrown for bad flag combinations that CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SignOptions {
  std::size_t budget = 400;
  std::string strategy = "pem";
  double alpha = 0.03;
  double beta = 0.03;
  std::uint64_t rng_seed = 0;
  std::string memory = "pmm";
  std::size_t mem_size = 65'536;
  std::size_t loop_unroll = 20;
  std::size_t top_k = 50'000;
  std::vector<std::string> seeds;  // hex or decimal; empty means the standard set
  std::uint64_t pm_seed = 0x70b5eed;
  bool kind_blind = false;

  SignConfig config() const {
    SignConfig c;
    c.sampler.budget = budget;
    c.sampler.strategy = strategy_from_string(strategy);
    c.sampler.beta_alpha = alpha;
    c.sampler.beta_beta = beta;
    c.sampler.rng_seed = rng_seed;
    c.interp.memory_model = memory_model_from_string(memory);
    c.interp.mem_size = mem_size;
    c.interp.loop_unroll = loop_unroll;
    c.normalize.top_k = top_k;
    c.normalize.kind_blind = kind_blind;
    c.pm_seed = pm_seed;
    if (!seeds.empty()) {
      c.seeds.clear();
      for (const auto& s : seeds) c.seeds.push_back(parse_hex(s));
    }
    c.interp.check();
    c.sampler.check();
    return c;
  }
};

void add_sign_options(CLI::App* cmd, SignOptions& o) {
  cmd->add_option("--budget", o.budget, "Flips per seed value")->capture_default_str();
  cmd->add_option("--strategy", o.strategy, "pem, det or lastpred")
      ->check(CLI::IsMember({"pem", "det", "lastpred"}))
      ->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "Beta distribution alpha")->capture_default_str();
  cmd->add_option("--beta", o.beta, "Beta distribution beta")->capture_default_str();
  cmd->add_option("--seed", o.rng_seed, "Sampler RNG seed")->capture_default_str();
  cmd->add_option("--memory", o.memory, "Invalid-access model: pmm, const or nomem")
      ->check(CLI::IsMember({"pmm", "const", "nomem"}))
      ->capture_default_str();
  cmd->add_option("--gamma", o.mem_size, "Probabilistic memory size")->capture_default_str();
  cmd->add_option("--loop-unroll", o.loop_unroll, "Taken-edge limit per predicate")->capture_default_str();
  cmd->add_option("--top-k", o.top_k, "Values kept per signature")->capture_default_str();
  cmd->add_option("--seed-values", o.seeds, "Seed inputs (default: the fixed set of ten)")->delimiter(',');
  cmd->add_option("--pm-seed", o.pm_seed, "Probabilistic memory seed")->capture_default_str();
  cmd->add_flag("--kind-blind", o.kind_blind, "Compare values regardless of kind");
}

bool is_signature_file(const fs::path& p) { return p.extension() == ".json"; }

// Expands directories into their .pem/.json files, sorted by name.
std::vector<fs::path> expand(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".pem" || ext == ".json")) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      out.push_back(p);
    } else {
      throw InputError(p.string() + ": no such file or directory");
    }
  }
  return out;
}

// Loads signatures directly, or signs programs.
std::vector<Signature> load_or_sign(const std::vector<std::string>& inputs, const SignOptions& opts,
                                    std::size_t workers, std::vector<SignStats>* stats = nullptr) {
  const auto files = expand(inputs);
  std::vector<Signature> sigs(files.size());
  std::vector<Program> programs;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (is_signature_file(files[i])) {
      sigs[i] = read_signature(files[i]);
    } else {
      programs.push_back(read_program(files[i]));
      slots.push_back(i);
    }
  }
  if (!programs.empty()) {
    std::vector<SignStats> st;
    auto signed_ = sign_all(programs, opts.config(), workers, &st);
    for (std::size_t j = 0; j < slots.size(); ++j) sigs[slots[j]] = std::move(signed_[j]);
    if (stats) *stats = std::move(st);
  }
  return sigs;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  return f;
}

// Writes to the named file, or stdout for "" and "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
  } else {
    auto f = open_out(path);
    fn(f);
  }
}

int cmd_asm(const std::string& in, const std::string& out, bool stats) {
  const Program p = read_program(in);
  if (stats) {
    const Cfg cfg = static_cfg(p);
    nlohmann::json j = {{"program", p.name},
                        {"instructions", p.size()},
                        {"blocks", cfg.blocks.size()},
                        {"edges", cfg.edge_count()},
                        {"connectivity", cfg.connectivity()},
                        {"predicates", cfg.conditional_branch_count(p)}};
    with_output(out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  } else {
    with_output(out, [&](std::ostream& os) { os << emit(p); });
  }
  return kOk;
}

int cmd_transform(const std::string& in, const std::string& out, const std::string& plan_name,
                  const std::vector<std::string>& passes, std::uint64_t seed, std::size_t factor) {
  const Program p = read_program(in);
  TransformPlan plan = TransformPlan::preset(plan_name, seed);
  for (const auto& name : passes) plan.passes.push_back({pass_kind_from_string(name), factor, 1.0});
  const TransformReport r = apply(p, plan);
  for (const auto& [kind, sites] : r.sites) std::cerr << to_string(kind) << ": " << sites << " site(s)\n";
  with_output(out, [&](std::ostream& os) { os << emit(r.program); });
  return kOk;
}

// "ic:target" pairs.
PathDescriptor parse_path(const std::vector<std::string>& forced) {
  PathDescriptor d;
  for (const auto& f : forced) {
    const auto colon = f.find(':');
    if (colon == std::string::npos) throw UsageError("--force expects ic:target, got '" + f + "'");
    d.forced[parse_hex(f.substr(0, colon))] = static_cast<CodeIndex>(parse_hex(f.substr(colon + 1)));
  }
  return d;
}

int cmd_run(const std::string& in, const std::string& out, const std::string& seed_value,
            const std::vector<std::string>& forced, const SignOptions& opts) {
  const Program p = read_program(in);
  const SignConfig cfg = opts.config();
  const Value seed = seed_value.empty() ? cfg.seeds.front() : parse_hex(seed_value);
  const RunResult r = interpret(p, parse_path(forced), seed, cfg.interp, run_pm_seed(cfg.pm_seed, seed));
  with_output(out, [&](std::ostream& os) { os << to_json(r).dump(2) << '\n'; });
  return kOk;
}

int cmd_sign(const std::vector<std::string>& inputs, const std::string& out, const SignOptions& opts,
             std::size_t workers) {
  const auto files = expand(inputs);
  std::vector<Program> programs;
  for (const auto& f : files) programs.push_back(read_program(f));
  std::vector<SignStats> stats;
  const auto sigs = sign_all(programs, opts.config(), workers, &stats);
  if (programs.size() == 1 && !fs::is_directory(out)) {
    write_signature(out, sigs.front());
  } else {
    fs::create_directories(out);
    for (const auto& s : sigs) write_signature(fs::path(out) / (s.program_name + ".json"), s);
  }
  for (std::size_t i = 0; i < sigs.size(); ++i)
    std::cerr << sigs[i].program_name << ": " << sigs[i].values.size() << " values, coverage "
              << stats[i].coverage << '\n';
  return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, const SignOptions& opts, std::size_t workers) {
  const auto sigs = load_or_sign({a, b}, opts, workers);
  std::printf("%.6f\n", jaccard(sigs[0], sigs[1]));
  return kOk;
}

int cmd_matrix(const std::vector<std::string>& queries, const std::vector<std::string>& pool,
               const std::string& out, const SignOptions& opts, std::size_t workers) {
  const auto q = load_or_sign(queries, opts, workers);
  const auto p = load_or_sign(pool, opts, workers);
  with_output(out, [&](std::ostream& os) { write_matrix_csv(os, q, p); });
  return kOk;
}

double mean_coverage(const std::vector<SignStats>& s) {
  if (s.empty()) return 0;
  double sum = 0;
  for (const auto& x : s) sum += x.coverage;
  return sum / static_cast<double>(s.size());
}

int cmd_eval(const std::vector<std::string>& queries, const std::vector<std::string>& pool,
             const std::vector<std::size_t>& ratios, const std::string& out, const SignOptions& opts,
             std::size_t workers) {
  std::vector<SignStats> qs, ps;
  const auto q = load_or_sign(queries, opts, workers, &qs);
  const auto p = load_or_sign(pool, opts, workers, &ps);
  if (q.empty() || p.empty()) throw InputError("eval needs at least one query and one pool entry");
  EvalReport r = evaluate(q, p, workers);
  nlohmann::json j = {{"queries", r.queries}, {"pool", r.pool}, {"pr1", r.pr1}, {"pr3", r.pr3}, {"pr5", r.pr5}};
  if (!qs.empty()) j["query_coverage"] = mean_coverage(qs);
  if (!ps.empty()) j["pool_coverage"] = mean_coverage(ps);
  if (!ratios.empty()) {
    nlohmann::json sweep = nlohmann::json::array();
    for (std::size_t n : ratios)
      sweep.push_back({{"ratio", n == 0 ? std::string("inf") : std::to_string(n)}, {"pr1", pr1_at_ratio(q, p, n)}});
    j["ratios"] = sweep;
  }
  with_output(out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  return kOk;
}

struct TheoryOptions {
  std::string what;
  std::string out;
  double t = 0.1, q = 0.1;
  std::size_t kmax = 10;
  std::size_t trials = 0;
  std::uint64_t seed = 1;
  double p0 = 0.85, phi = 0.75;
  std::size_t budget = 400;
  std::vector<std::size_t> extra{0, 20, 40, 60, 80};
  std::size_t steps = 10;
};

int cmd_theory(const TheoryOptions& o) {
  std::ostringstream csv;
  if (o.what == "pk") {
    const theory::StabilityParams sp{o.t, o.q};
    sp.check();
    std::vector<theory::MonteCarloEstimate> mc;
    if (o.trials > 0) mc = theory::p_stable_monte_carlo(o.kmax, sp, o.trials, o.seed);
    csv << "k,p_stable" << (mc.empty() ? "" : ",mc_mean,mc_se") << '\n';
    for (std::size_t k = 1; k <= o.kmax; ++k) {
      csv << k << ',' << theory::p_stable(k, sp);
      if (!mc.empty()) csv << ',' << mc[k - 1].mean << ',' << mc[k - 1].stddev;
      csv << '\n';
    }
  } else if (o.what == "eprk") {
    csv << "extra,boosted_p,expected_pr1\n";
    for (std::size_t k : o.extra) {
      const theory::StepModelParams sp{o.p0, o.budget, k, o.phi};
      sp.check();
      csv << k << ',' << theory::boosted_p(sp) << ',' << theory::expected_pr1(sp, {}) << '\n';
    }
  } else if (o.what == "coincide") {
    const auto table = theory::n_k_paths_table(o.budget, o.budget);
    csv << "k,p_same,n_paths,expected\n";
    for (std::size_t k = 0; k <= o.budget; ++k) {
      const double n = table[k][o.budget];
      if (n <= 0) continue;
      csv << k << ',' << theory::p_same(k) << ',' << n << ',' << theory::p_same(k) * n << '\n';
    }
    std::cerr << "expected coincided paths: " << theory::expected_coincided(o.budget) << '\n';
  } else if (o.what == "pstate") {
    const theory::StateTable table(o.steps, o.p0, o.p0);
    csv << "c,e,p\n";
    for (std::size_t c = 0; c <= o.steps; ++c) {
      const long e = static_cast<long>(o.steps - c);
      csv << c << ',' << e << ',' << table(static_cast<long>(c), e) << '\n';
    }
  } else if (o.what == "pareto") {
    const theory::ParetoParams pp;
    csv << "correct_steps,pr1\n";
    for (std::size_t i = 0; i <= o.budget; ++i) csv << i << ',' << theory::pr1(static_cast<double>(i), pp) << '\n';
  }
  with_output(o.out, [&](std::ostream& os) { os << csv.str(); });
  return kOk;
}

struct GenOptions {
  std::size_t blocks = 150;
  double connectivity = 3.0;
  std::size_t loops = 4;
  double extern_density = 0.15;
  std::size_t n = 100;
  std::size_t family = 4;
  std::size_t perturbed = 2;
  std::uint64_t seed = 0;
  std::string out = "corpus";
};

int cmd_gen(const GenOptions& o) {
  CorpusSpec cs;
  cs.gen.blocks = o.blocks;
  cs.gen.connectivity = o.connectivity;
  cs.gen.loops = o.loops;
  cs.gen.extern_density = o.extern_density;
  cs.gen.rng_seed = o.seed;
  cs.functions = o.n;
  cs.family_size = o.family;
  cs.perturbed = o.perturbed;
  const auto corpus = generate_corpus(cs);
  fs::create_directories(o.out);
  for (const auto& p : corpus) write_program(fs::path(o.out) / (p.name + ".pem"), p);
  std::cerr << corpus.size() << " program(s) written to " << o.out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-sampling semantic similarity for toy-IR programs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; sections name subcommands");
  app.set_version_flag("--version", "pem 0.1.0");
  std::size_t workers = default_workers();
  app.add_option("-j,--workers", workers, "Worker threads (default: PEM_WORKERS or all cores)");

  std::string in, out, a, b, plan = "identity", seed_value;
  std::vector<std::string> inputs, queries, pool, passes, forced;
  std::vector<std::size_t> ratios;
  std::uint64_t plan_seed = 0;
  std::size_t factor = 2;
  bool stats = false;
  SignOptions sopts;
  TheoryOptions topts;
  GenOptions gopts;

  auto* asm_ = app.add_subcommand("asm", "Parse, validate and print canonical assembly");
  asm_->add_option("input", in, "Program file")->required();
  asm_->add_option("-o,--output", out, "Output file");
  asm_->add_flag("--stats", stats, "Print CFG metrics as JSON instead");

  auto* transform = app.add_subcommand("transform", "Apply semantics-preserving passes");
  transform->add_option("input", in, "Program file")->required();
  transform->add_option("-o,--output", out, "Output file");
  transform->add_option("--plan", plan, "Preset: identity, O0, O3 or rename")->capture_default_str();
  transform->add_option("--pass", passes, "Extra pass, repeatable (e.g. unroll-loop)");
  transform->add_option("--seed", plan_seed, "Pass RNG seed")->capture_default_str();
  transform->add_option("--factor", factor, "Unroll factor for --pass unroll-loop")->capture_default_str();

  auto* run = app.add_subcommand("run", "Interpret one path and print the run as JSON");
  run->add_option("input", in, "Program file")->required();
  run->add_option("-o,--output", out, "Output file");
  run->add_option("--seed-value", seed_value, "Seed input (default: first standard seed)");
  run->add_option("--force", forced, "Forced branch ic:target, repeatable");
  add_sign_options(run, sopts);

  auto* sign_ = app.add_subcommand("sign", "Sample paths and write signatures");
  sign_->add_option("inputs", inputs, "Program files or directories")->required();
  sign_->add_option("-o,--output", out, "Signature file, or directory for several")->required();
  add_sign_options(sign_, sopts);

  auto* compare = app.add_subcommand("compare", "Jaccard similarity of two signatures or programs");
  compare->add_option("a", a, "Signature or program")->required();
  compare->add_option("b", b, "Signature or program")->required();
  add_sign_options(compare, sopts);

  auto* matrix = app.add_subcommand("matrix", "Similarity CSV of every query against every pool entry");
  matrix->add_option("--queries", queries, "Signatures or programs")->required();
  matrix->add_option("--pool", pool, "Signatures or programs")->required();
  matrix->add_option("-o,--output", out, "CSV file");
  add_sign_options(matrix, sopts);

  auto* eval = app.add_subcommand("eval", "PR@1/3/5 where ground truth shares the program name");
  eval->add_option("--queries", queries, "Signatures or programs")->required();
  eval->add_option("--pool", pool, "Signatures or programs")->required();
  eval->add_option("--ratios", ratios, "Negative:positive ratios to sweep; 0 means all")->delimiter(',');
  eval->add_option("-o,--output", out, "JSON report");
  add_sign_options(eval, sopts);

  auto* th = app.add_subcommand("theory", "Tabulate the analytic models as CSV");
  th->add_option("model", topts.what, "pk, eprk, coincide, pstate or pareto")
      ->required()
      ->check(CLI::IsMember({"pk", "eprk", "coincide", "pstate", "pareto"}));
  th->add_option("-o,--output", topts.out, "CSV file");
  th->add_option("--t", topts.t, "Elimination probability")->capture_default_str();
  th->add_option("--q", topts.q, "Insertion probability")->capture_default_str();
  th->add_option("--kmax", topts.kmax, "Largest rank")->capture_default_str();
  th->add_option("--trials", topts.trials, "Monte-Carlo trials for pk (0: none)")->capture_default_str();
  th->add_option("--seed", topts.seed, "Monte-Carlo seed")->capture_default_str();
  th->add_option("--p0", topts.p0, "Per-step success probability")->capture_default_str();
  th->add_option("--phi", topts.phi, "Share of extra steps spent near the extremes")->capture_default_str();
  th->add_option("--budget", topts.budget, "Sampling budget")->capture_default_str();
  th->add_option("--extra", topts.extra, "Extra steps K to tabulate")->delimiter(',');
  th->add_option("--steps", topts.steps, "Steps for pstate")->capture_default_str();

  auto* gen = app.add_subcommand("gen", "Generate a random corpus");
  gen->add_option("--blocks", gopts.blocks)->capture_default_str();
  gen->add_option("--connectivity", gopts.connectivity)->capture_default_str();
  gen->add_option("--loops", gopts.loops)->capture_default_str();
  gen->add_option("--extern-density", gopts.extern_density)->capture_default_str();
  gen->add_option("--n", gopts.n, "Number of functions")->capture_default_str();
  gen->add_option("--family-size", gopts.family, "Near-twin functions per skeleton")->capture_default_str();
  gen->add_option("--perturbed", gopts.perturbed, "Regions tweaked per twin")->capture_default_str();
  gen->add_option("--seed", gopts.seed)->capture_default_str();
  gen->add_option("-o,--output", gopts.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (workers == 0) throw UsageError("--workers must be at least 1");
    if (*asm_) return cmd_asm(in, out, stats);
    if (*transform) return cmd_transform(in, out, plan, passes, plan_seed, factor);
    if (*run) return cmd_run(in, out, seed_value, forced, sopts);
    if (*sign_) return cmd_sign(inputs, out, sopts, workers);
    if (*compare) return cmd_compare(a, b, sopts, workers);
    if (*matrix) return cmd_matrix(queries, pool, out, sopts, workers);
    if (*eval) return cmd_eval(queries, pool, ratios, out, sopts, workers);
    if (*th) return cmd_theory(topts);
    if (*gen) return cmd_gen(gopts);
  } catch (const UsageError& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kInput;
  } catch (const ProgramError& e) {
    std::cerr << "pem: invalid program: " << e.what() << '\n';
    return kInput;
  } catch (const FormatError& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kInput;
  } catch (const GenError& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kInput;
  } catch (const IoError& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "pem: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "pem: internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
