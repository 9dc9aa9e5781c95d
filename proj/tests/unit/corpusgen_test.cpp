#include <gtest/gtest.h>

#include "pem/cfg.hpp"
#include "pem/corpusgen.hpp"
#include "pem/interp.hpp"

namespace pem {
namespace {

TEST(Generate, SingleBlockIsStraightLine) {
  GenSpec spec;
  spec.blocks = 1;
  spec.loops = 0;
  const Program p = generate(spec);
  const Cfg cfg = static_cfg(p);
  EXPECT_EQ(cfg.blocks.size(), 1u);
  EXPECT_EQ(cfg.conditional_branch_count(p), 0u);
  EXPECT_EQ(p.code.back().op, Opcode::Done);
}

TEST(Generate, Deterministic) {
  GenSpec spec;
  spec.rng_seed = 99;
  EXPECT_EQ(generate(spec), generate(spec));
  GenSpec other = spec;
  other.rng_seed = 100;
  EXPECT_NE(generate(spec).code, generate(other).code);
}

TEST(Generate, HitsTargetShape) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenSpec spec;
    spec.rng_seed = seed;
    const GenMetrics m = measure(generate(spec));
    EXPECT_TRUE(within_spec(m, spec)) << "seed " << seed << ": " << m.blocks << " blocks, " << m.connectivity;
    EXPECT_NEAR(double(m.blocks), 150.0, 15.0);
    EXPECT_NEAR(m.connectivity, 3.0, 0.3);
  }
}

TEST(Generate, RejectsBadSpecs) {
  GenSpec spec;
  spec.blocks = 0;
  EXPECT_THROW(generate(spec), GenError);
  spec = {};
  spec.extern_density = 1.5;
  EXPECT_THROW(generate(spec), GenError);
}

TEST(Corpus, ValidTerminatingAndNamed) {
  CorpusSpec cs;
  cs.functions = 12;
  cs.family_size = 3;
  cs.gen.rng_seed = 8;
  const std::vector<Program> corpus = generate_corpus(cs);
  ASSERT_EQ(corpus.size(), 12u);
  std::set<std::string> names;
  for (const Program& p : corpus) {
    EXPECT_NO_THROW(validate(p));
    names.insert(p.name);
    const Interpreter interp(p, {});
    for (Value seed : standard_seeds()) EXPECT_EQ(interp.run(nullptr, seed, 1).terminated, Termination::Done);
  }
  EXPECT_EQ(names.size(), 12u);
  EXPECT_TRUE(names.count("f0_0"));
  EXPECT_TRUE(names.count("f3_2"));
}

TEST(Corpus, FamilyMembersShareShapeButDiffer) {
  GenSpec spec;
  spec.rng_seed = 12;
  const auto fam = generate_family(spec, 3, 2, "g");
  ASSERT_EQ(fam.size(), 3u);
  EXPECT_EQ(static_cfg(fam[0]).blocks.size(), static_cfg(fam[1]).blocks.size());
  EXPECT_NE(fam[0].code, fam[1].code);
  EXPECT_NE(fam[1].code, fam[2].code);
}

}  // namespace
}  // namespace pem
