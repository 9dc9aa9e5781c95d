#include "pem/corpusgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <map>
#include <set>

#include "pem/cfg.hpp"
#include "pem/interp.hpp"
#include "pem/pmm.hpp"

namespace pem {

void GenSpec::check() const {
  if (blocks == 0) throw GenError("block count must be positive");
  if (connectivity < 0) throw GenError("connectivity must be non-negative");
  if (tolerance <= 0) throw GenError("tolerance must be positive");
  if (!(extern_density >= 0 && extern_density <= 1)) throw GenError("extern density must lie in [0, 1]");
  if (blocks > 1 && connectivity > 0 && (connectivity < 1.0 || connectivity > 4.0))
    throw GenError("connectivity target outside the reachable range [1, 4]");
}

GenMetrics measure(const Program& program) {
  const Cfg cfg = static_cfg(program);
  return {cfg.blocks.size(), cfg.connectivity()};
}

bool within_spec(const GenMetrics& m, const GenSpec& spec) {
  if (spec.blocks == 1) return m.blocks == 1;
  const double b = static_cast<double>(spec.blocks);
  if (std::abs(static_cast<double>(m.blocks) - b) > spec.tolerance * b) return false;
  if (spec.connectivity > 0 && std::abs(m.connectivity - spec.connectivity) > spec.tolerance * spec.connectivity)
    return false;
  return true;
}

namespace {

constexpr Value kDataBase = 0x100000;

constexpr std::array<const char*, 20> kSymbols = {
    "malloc", "free",  "memcpy", "memset", "strlen", "strcmp", "printf", "puts",  "fopen", "fclose",
    "read",   "write", "open",   "close",  "qsort",  "getenv", "time",   "rand",  "fputs", "strchr"};
constexpr std::array<const char*, 4> kErrorSymbols = {"usage", "abort", "perror", "exit"};

// Register conventions.
constexpr int kZero = 24, kOne = 25, kEight = 26, kData = 27, kCounter = 28, kBound = 29, kLink = 30;
constexpr int kNode = 16, kAcc = 17, kOff = 18, kHops = 19;
constexpr int kCmpK = 20, kCmpC = 21, kCmpK2 = 22, kCmpC2 = 23;

enum class Kind { Straight, Guard, PrologueGuard, IfThen, Diamond, Implied, Cascade, Loop, ListWalk, Call };

struct Region {
  Kind kind = Kind::Straight;
  std::size_t size = 1;  // straight ops, cascade cases
  std::size_t target = 0;  // fail handler or subroutine
  bool new_sub = false;
  std::uint32_t id = 0;
  std::vector<std::vector<Region>> arms;
};

struct Skeleton {
  std::vector<Region> body;
  std::vector<Region> subs;  // one straight region per subroutine
  std::size_t fails = 0;
  std::uint32_t next_id = 0;
};

struct Estimate {
  long blocks = 0;
  long edges = 0;
  Estimate& operator+=(const Estimate& o) {
    blocks += o.blocks;
    edges += o.edges;
    return *this;
  }
};

Estimate estimate(const std::vector<Region>& seq);

Estimate estimate(const Region& r) {
  switch (r.kind) {
    case Kind::Straight: return {0, 0};
    case Kind::Guard:
    case Kind::PrologueGuard: return {1, 2};
    case Kind::IfThen: {
      Estimate e{2, 3};
      e += estimate(r.arms[0]);
      return e;
    }
    case Kind::Diamond: {
      Estimate e{3, 4};
      e += estimate(r.arms[0]);
      e += estimate(r.arms[1]);
      return e;
    }
    case Kind::Implied: return {5, 7};
    case Kind::Cascade: {
      const long m = static_cast<long>(r.size);
      return {2 * m + 1, 3 * m + 1};
    }
    case Kind::Loop: {
      Estimate e{2, 3};
      if (!r.arms.empty()) e += estimate(r.arms[0]);
      return e;
    }
    case Kind::ListWalk: return {3, 5};
    case Kind::Call: return r.new_sub ? Estimate{2, 1} : Estimate{1, 1};
  }
  return {};
}

Estimate estimate(const std::vector<Region>& seq) {
  Estimate e;
  for (const Region& r : seq) e += estimate(r);
  return e;
}

class SkeletonBuilder {
 public:
  SkeletonBuilder(const GenSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  Skeleton build() {
    Skeleton sk;
    sk_ = &sk;
    const long target = static_cast<long>(spec_.blocks);
    if (target <= 1) {
      sk.body.push_back(straight(3));
      return sk;
    }
    sk.fails = target >= 12 ? 3 : target >= 4 ? 1 : 0;
    Estimate est{1 + static_cast<long>(sk.fails), 0};
    if (sk.fails > 0)
      for (int g = 0; g < 2 && est.blocks + 1 < target; ++g) {
        Region r = make(Kind::PrologueGuard);
        est += estimate(r);
        sk.body.push_back(std::move(r));
      }
    loops_left_ = spec_.loops;
    while (est.blocks < target - 1) {
      const long remaining = target - est.blocks;
      const double conn = est.blocks > 0 ? 2.0 * est.edges / est.blocks : 0.0;
      Region r = top_level(conn < spec_.connectivity, remaining);
      const Estimate e = estimate(r);
      if (e.blocks > remaining + 1) continue;
      est += e;
      if (coin(0.6)) sk.body.push_back(straight(1 + pick(3)));
      sk.body.push_back(std::move(r));
    }
    sk.body.push_back(straight(2));
    return sk;
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  Region make(Kind k) {
    Region r;
    r.kind = k;
    r.id = sk_->next_id++;
    return r;
  }
  Region straight(std::size_t ops) {
    Region r = make(Kind::Straight);
    r.size = ops;
    return r;
  }

  Kind weighted(const std::vector<std::pair<Kind, double>>& options) {
    double total = 0;
    for (const auto& [k, w] : options) total += w;
    double x = std::uniform_real_distribution<double>(0.0, total)(rng_);
    for (const auto& [k, w] : options) {
      if (x < w) return k;
      x -= w;
    }
    return options.back().first;
  }

  std::vector<Region> arm(int depth) {
    std::vector<Region> seq;
    seq.push_back(straight(1 + pick(2)));
    if (depth >= 2) return seq;
    std::vector<std::pair<Kind, double>> opts = {{Kind::Straight, 55}, {Kind::IfThen, 15}, {Kind::Diamond, 10},
                                                 {Kind::Cascade, 5}};
    if (sk_->fails > 0) opts.push_back({Kind::Guard, 15});
    const Kind k = weighted(opts);
    if (k != Kind::Straight) seq.push_back(nested(k, depth + 1));
    return seq;
  }

  Region nested(Kind k, int depth) {
    Region r = make(k);
    switch (k) {
      case Kind::Guard: r.target = pick(sk_->fails); break;
      case Kind::IfThen: r.arms = {arm(depth)}; break;
      case Kind::Diamond: r.arms = {arm(depth), arm(depth)}; break;
      case Kind::Cascade: r.size = 2 + pick(3); break;
      default: break;
    }
    return r;
  }

  Region top_level(bool raise, long remaining) {
    std::vector<std::pair<Kind, double>> opts;
    const bool loops = loops_left_ > 0;
    if (raise) {
      opts = {{Kind::Cascade, 3}, {Kind::IfThen, 2}, {Kind::Implied, 1}, {Kind::Call, 1}};
      if (sk_->fails > 0) opts.push_back({Kind::Guard, 4});
      if (loops) opts.push_back({Kind::ListWalk, 1});
    } else {
      opts = {{Kind::Diamond, 3}, {Kind::Call, 2}, {Kind::IfThen, 1}, {Kind::Implied, 1}};
      if (loops) {
        opts.push_back({Kind::Loop, 2});
        opts.push_back({Kind::ListWalk, 1});
      }
    }
    const Kind k = weighted(opts);
    Region r = make(k);
    switch (k) {
      case Kind::Guard: r.target = pick(sk_->fails); break;
      case Kind::IfThen: r.arms = {arm(1)}; break;
      case Kind::Diamond: r.arms = {arm(1), arm(1)}; break;
      case Kind::Cascade: {
        const std::size_t max_cases = static_cast<std::size_t>(std::clamp<long>((remaining - 1) / 2, 2, 5));
        r.size = 2 + pick(max_cases - 1);
        break;
      }
      case Kind::Loop: {
        --loops_left_;
        if (coin(0.4)) {
          Region inner = make(Kind::IfThen);
          inner.arms = {{straight(1)}};
          r.arms = {{inner}};
        }
        break;
      }
      case Kind::ListWalk: --loops_left_; break;
      case Kind::Call: {
        if (sk_->subs.empty() || coin(0.7)) {
          r.new_sub = true;
          r.target = sk_->subs.size();
          sk_->subs.push_back(straight(2 + pick(3)));
        } else {
          r.target = pick(sk_->subs.size());
        }
        break;
      }
      default: break;
    }
    return r;
  }

  const GenSpec& spec_;
  std::mt19937_64 rng_;
  Skeleton* sk_ = nullptr;
  std::size_t loops_left_ = 0;
};

class Renderer {
 public:
  using Label = ProgramBuilder::Label;

  Renderer(const GenSpec& spec, const Skeleton& sk, const std::string& name, std::uint64_t base_seed)
      : spec_(spec), sk_(sk), b_(name), base_seed_(base_seed) {}

  /// Instruction span [begin, end) of each top-level region, by region id.
  const std::map<std::uint32_t, std::pair<CodeIndex, CodeIndex>>& spans() const { return spans_; }

  Program render() {
    const Label entry = b_.new_label();
    b_.bind(entry);
    b_.set_entry(entry);
    b_.li(kZero, 0).li(kOne, 1).li(kEight, 8).li(kData, kDataBase);
    for (std::size_t f = 0; f < sk_.fails; ++f) fail_.push_back(b_.new_label());
    for (std::size_t s = 0; s < sk_.subs.size(); ++s) subs_.push_back(b_.new_label());
    for (const Region& r : sk_.body) {
      const CodeIndex begin = b_.size();
      region(r);
      spans_[r.id] = {begin, b_.size()};
    }
    {
      auto rng = rng_for(0xfffffff0U);
      store_value(rng, 1 + static_cast<int>(rng() % 6));
    }
    b_.done();
    for (std::size_t f = 0; f < sk_.fails; ++f) {
      auto rng = rng_for(0xffffff00U + static_cast<std::uint32_t>(f));
      b_.bind(fail_[f]);
      b_.call(kErrorSymbols[rng() % kErrorSymbols.size()]);
      const int t = 7;
      b_.li(t, 1 + rng() % 255);
      store_value(rng, t);
      b_.done();
    }
    for (std::size_t s = 0; s < sk_.subs.size(); ++s) {
      b_.bind(subs_[s]);
      region(sk_.subs[s]);
      b_.jr(kLink);
    }
    return b_.build();
  }

 private:
  std::mt19937_64 rng_for(std::uint32_t id) const {
    return std::mt19937_64(mix64(base_seed_ ^ mix64(static_cast<std::uint64_t>(id) + 1)));
  }

  int temp() { return 7 + static_cast<int>(temp_++ % 9); }
  static int param(std::mt19937_64& rng) { return 1 + static_cast<int>(rng() % 6); }
  static Value data_offset(std::mt19937_64& rng) { return (rng() % 0x1000) * 8; }

  void address(std::mt19937_64& rng, int ta) {
    b_.li(ta, data_offset(rng));
    b_.op(ta, kData, BinOp::Add, ta);
  }

  void store_value(std::mt19937_64& rng, int value) {
    const int ta = temp();
    address(rng, ta);
    b_.st(ta, value);
  }

  BinOp mixing_op(std::mt19937_64& rng) {
    static constexpr std::array<BinOp, 5> ops = {BinOp::Add, BinOp::Xor, BinOp::Mul, BinOp::Sub, BinOp::Or};
    return ops[rng() % ops.size()];
  }

  /// Emits x = f(param) with x in [0, range).
  int derive(std::mt19937_64& rng, Value mask) {
    const int p = param(rng);
    const int x = temp();
    const int t = temp();
    switch (rng() % 3) {
      case 0:
        b_.li(t, mask).op(x, p, BinOp::And, t);
        break;
      case 1:
        b_.li(t, 4 * (1 + rng() % 6)).op(x, p, BinOp::Shr, t);
        b_.li(t, mask).op(x, x, BinOp::And, t);
        break;
      default:
        b_.li(t, rng() | 1).op(x, p, BinOp::Mul, t);
        b_.li(t, 40).op(x, x, BinOp::Shr, t);
        b_.li(t, mask).op(x, x, BinOp::And, t);
        break;
    }
    return x;
  }

  void straight_op(std::mt19937_64& rng) {
    const double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const int p = param(rng);
    if (roll < spec_.extern_density) {
      b_.call(kSymbols[rng() % kSymbols.size()]);
      if (rng() % 2) store_value(rng, 0);
      return;
    }
    const int t1 = temp();
    const int t2 = temp();
    const std::size_t kind = rng() % 10;
    if (kind < 4) {
      b_.li(t1, rng() % 0x10000).op(t2, p, mixing_op(rng), t1);
      store_value(rng, t2);
    } else if (kind < 6) {
      const int ta = temp();
      address(rng, ta);
      b_.ld(t1, ta).op(t1, t1, mixing_op(rng), p).st(ta, t1);
    } else if (kind < 7) {
      Value s = 0;
      const std::size_t len = 2 + rng() % 6;
      for (std::size_t c = 0; c < len; ++c) s |= static_cast<Value>('a' + rng() % 26) << (8 * c);
      const int ta = temp();
      b_.li(t1, s);
      address(rng, ta);
      b_.sts(ta, t1);
    } else if (kind < 8) {
      b_.li(t1, 1 + rng() % 0x100).op(p, p, mixing_op(rng), t1);
    } else {
      b_.li(t1, 8 * (rng() % 4)).op(t2, p, BinOp::Add, t1).ld(t1, t2);
      store_value(rng, t1);
    }
  }

  void sequence(const std::vector<Region>& seq) {
    for (const Region& r : seq) region(r);
  }

  CmpOp range_op(std::mt19937_64& rng) {
    static constexpr std::array<CmpOp, 4> ops = {CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge};
    return ops[rng() % ops.size()];
  }

  void region(const Region& r) {
    auto rng = rng_for(r.id);
    temp_ = r.id * 5;
    switch (r.kind) {
      case Kind::Straight:
        for (std::size_t i = 0; i < r.size; ++i) straight_op(rng);
        break;
      case Kind::PrologueGuard:
        b_.cmp(kCmpC, param(rng), CmpOp::Eq, kZero).jcc(kCmpC, fail_[0]);
        break;
      case Kind::Guard: {
        const int x = derive(rng, 0xff);
        b_.li(kCmpK, rng() % 0x100).cmp(kCmpC, x, CmpOp::Eq, kCmpK).jcc(kCmpC, fail_[r.target]);
        break;
      }
      case Kind::IfThen: {
        const Label join = b_.new_label();
        const int x = derive(rng, 0xff);
        b_.li(kCmpK, 0x20 + rng() % 0xc0).cmp(kCmpC, x, range_op(rng), kCmpK).jcc(kCmpC, join);
        sequence(r.arms[0]);
        b_.bind(join);
        break;
      }
      case Kind::Diamond: {
        const Label then = b_.new_label();
        const Label join = b_.new_label();
        const int x = derive(rng, 0xff);
        b_.li(kCmpK, 0x20 + rng() % 0xc0).cmp(kCmpC, x, range_op(rng), kCmpK).jcc(kCmpC, then);
        sequence(r.arms[0]);
        b_.jmp(join);
        b_.bind(then);
        sequence(r.arms[1]);
        b_.bind(join);
        break;
      }
      case Kind::Implied: {
        const Label inner = b_.new_label();
        const Label deeper = b_.new_label();
        const Label join = b_.new_label();
        const int x = derive(rng, 0xff);
        const bool upper = rng() % 2;
        const Value k1 = upper ? 0x60 + rng() % 0x60 : 0x40 + rng() % 0x60;
        const Value gap = 1 + rng() % 0x30;
        const Value k2 = upper ? k1 - gap : k1 + gap;
        const CmpOp op = upper ? CmpOp::Gt : CmpOp::Lt;
        b_.li(kCmpK, k1).cmp(kCmpC, x, op, kCmpK).jcc(kCmpC, inner);
        straight_op(rng);
        b_.jmp(join);
        b_.bind(inner);
        b_.li(kCmpK2, k2).cmp(kCmpC2, x, op, kCmpK2).jcc(kCmpC2, deeper);
        straight_op(rng);
        b_.jmp(join);
        b_.bind(deeper);
        straight_op(rng);
        b_.bind(join);
        break;
      }
      case Kind::Cascade: {
        const int x = derive(rng, 0xf);
        std::vector<Value> keys;
        while (keys.size() < r.size) {
          const Value k = 2 + rng() % 14;
          if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
        }
        std::sort(keys.begin(), keys.end());
        std::vector<Label> cases;
        for (Value k : keys) {
          cases.push_back(b_.new_label());
          b_.li(kCmpK, k).cmp(kCmpC, x, CmpOp::Eq, kCmpK).jcc(kCmpC, cases.back());
        }
        const Label end = b_.new_label();
        straight_op(rng);
        b_.jmp(end);
        for (std::size_t c = 0; c < cases.size(); ++c) {
          b_.bind(cases[c]);
          straight_op(rng);
          if (c + 1 < cases.size()) b_.jmp(end);
        }
        b_.bind(end);
        break;
      }
      case Kind::Loop: {
        const Label head = b_.new_label();
        const int p = param(rng);
        const int ta = temp();
        const int v = temp();
        const Value base = data_offset(rng) & 0x7fff;
        b_.li(kCounter, 0).li(kBound, 3 + rng() % 10);
        b_.bind(head);
        b_.op(ta, kCounter, BinOp::Mul, kEight).li(v, base).op(ta, ta, BinOp::Add, v).op(ta, ta, BinOp::Add, kData);
        b_.op(v, p, mixing_op(rng), kCounter).st(ta, v);
        if (!r.arms.empty()) sequence(r.arms[0]);
        b_.op(kCounter, kCounter, BinOp::Add, kOne).cmp(kCmpC, kCounter, CmpOp::Lt, kBound).jcc(kCmpC, head);
        break;
      }
      case Kind::ListWalk: {
        static constexpr std::array<Value, 5> strides = {0x10, 0x18, 0x20, 0x28, 0x30};
        const Label head = b_.new_label();
        const Label exit = b_.new_label();
        const std::size_t root = rng() % 10;
        if (root < 5) b_.mov(kNode, param(rng));
        else if (root < 8) b_.li(kNode, 0);
        else {
          const int ta = temp();
          address(rng, ta);
          b_.ld(kNode, ta);
        }
        const int t = temp();
        const int ta = temp();
        b_.li(kAcc, 0).li(kCounter, 0).li(kHops, 3 + rng() % 6).li(kOff, strides[rng() % strides.size()] - 8);
        b_.bind(head);
        b_.ld(t, kNode).op(kAcc, kAcc, BinOp::Add, t);
        b_.op(ta, kNode, BinOp::Add, kOff).ld(kNode, ta);
        b_.cmp(kCmpC, kNode, CmpOp::Eq, kZero).jcc(kCmpC, exit);
        b_.op(kCounter, kCounter, BinOp::Add, kOne).cmp(kCmpC2, kCounter, CmpOp::Lt, kHops).jcc(kCmpC2, head);
        b_.bind(exit);
        store_value(rng, kAcc);
        break;
      }
      case Kind::Call: {
        const Label ret = b_.new_label();
        b_.la(kLink, ret).jmp(subs_[r.target]);
        b_.bind(ret);
        break;
      }
    }
  }

  const GenSpec& spec_;
  const Skeleton& sk_;
  ProgramBuilder b_;
  std::uint64_t base_seed_;
  std::map<std::uint32_t, std::pair<CodeIndex, CodeIndex>> spans_;
  std::vector<Label> fail_;
  std::vector<Label> subs_;
  std::size_t temp_ = 0;
};

bool terminates(const Program& p) {
  const InterpConfig config;
  for (Value s : standard_seeds())
    if (seed_path_run(p, s, config, 0).terminated != Termination::Done) return false;
  return true;
}

/// Changes one constant: small values stay small, others get bits flipped.
void tweak(Instruction& ins, std::mt19937_64& rng) {
  const Value old = ins.imm;
  if (old <= 0x100) {
    const Value lo = old <= 16 ? 1 : old - 16;
    const Value hi = old <= 16 ? 15 : old + 16;
    do ins.imm = lo + rng() % (hi - lo + 1);
    while (ins.imm == old);
  } else {
    ins.imm = old ^ (1 + rng() % 0xffff);
  }
}

struct Attempt {
  Skeleton skeleton;
  std::uint64_t seed = 0;
};

Attempt find_skeleton(const GenSpec& spec, const std::string& name) {
  spec.check();
  for (std::size_t a = 0; a < spec.max_attempts; ++a) {
    const std::uint64_t seed = mix64(spec.rng_seed ^ mix64(a));
    Skeleton sk = SkeletonBuilder(spec, seed).build();
    const Program p = Renderer(spec, sk, name, seed).render();
    if (within_spec(measure(p), spec) && terminates(p)) return {std::move(sk), seed};
  }
  throw GenError("no program within the requested block count and connectivity after " +
                 std::to_string(spec.max_attempts) + " attempts");
}

}  // namespace

Program generate(const GenSpec& spec, const std::string& name) {
  const Attempt a = find_skeleton(spec, name);
  return Renderer(spec, a.skeleton, name, a.seed).render();
}

std::vector<Program> generate_family(const GenSpec& spec, std::size_t variants, std::size_t perturbed,
                                     const std::string& prefix) {
  const Attempt a = find_skeleton(spec, prefix + "_0");
  Renderer base_renderer(spec, a.skeleton, prefix, a.seed);
  const Program base = base_renderer.render();
  std::vector<std::pair<CodeIndex, CodeIndex>> spans;
  for (const Region& r : a.skeleton.body)
    if (r.kind != Kind::PrologueGuard) spans.push_back(base_renderer.spans().at(r.id));

  std::vector<Program> out;
  for (std::size_t v = 0; v < variants; ++v) {
    Program p = base;
    p.name = prefix + "_" + std::to_string(v);
    if (v > 0) {
      std::mt19937_64 rng(mix64(a.seed ^ mix64(v)));
      for (std::size_t k = 0; k < perturbed;) {
        const auto [begin, end] = spans[rng() % spans.size()];
        std::vector<CodeIndex> sites;
        for (CodeIndex i = begin; i < end; ++i)
          if (p.code[i].op == Opcode::LoadImm && !p.code[i].code_address && p.code[i].dst.index() < kZero)
            sites.push_back(i);
        if (sites.empty()) continue;
        tweak(p.code[sites[rng() % sites.size()]], rng);
        ++k;
      }
    }
    if (!terminates(p)) throw GenError("variant " + p.name + " does not terminate");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Program> generate_corpus(const CorpusSpec& spec) {
  if (spec.family_size == 0) throw GenError("family size must be positive");
  std::vector<Program> out;
  for (std::size_t f = 0; out.size() < spec.functions; ++f) {
    GenSpec g = spec.gen;
    g.rng_seed = mix64(spec.gen.rng_seed ^ (0x9e3779b97f4a7c15ULL * (f + 1)));
    const std::size_t n = std::min(spec.family_size, spec.functions - out.size());
    for (Program& p : generate_family(g, n, spec.perturbed, "f" + std::to_string(f))) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace pem
