#include <random>

#include <gtest/gtest.h>

#include "rcond/kb.hpp"
#include "rcond/random_network.hpp"
#include "support/kb_fuzz.hpp"
#include "support/oracles.hpp"

using namespace rcond;
using namespace rcond::testing;

namespace {

constexpr VarId A = 0, B = 1, C = 2;

}  // namespace

TEST(CompileKb, WorkedExampleYieldsFourClauses) {
    const auto clauses = compile_clauses(section5_network());
    // (C=1 ∨ A≠1 ∨ B≠1), (C=2 ∨ A≠1 ∨ B≠2), (C≠3 ∨ A≠2 ∨ B≠1), (C≠3 ∨ A≠2 ∨ B≠2)
    const std::vector<Clause> expected{
        {{is(C, 0), is_not(A, 0), is_not(B, 0)}},
        {{is(C, 1), is_not(A, 0), is_not(B, 1)}},
        {{is_not(C, 2), is_not(A, 1), is_not(B, 0)}},
        {{is_not(C, 2), is_not(A, 1), is_not(B, 1)}},
    };
    EXPECT_EQ(clauses.size(), 4u);
    EXPECT_EQ(clause_set(clauses), clause_set(expected));
    EXPECT_EQ(dump_clauses(section5_network(), clauses),
              "p mvcnf 3 4 12\nC=1 A!=1 B!=1\nC=2 A!=1 B!=2\nC!=3 A!=2 B!=1\nC!=3 A!=2 B!=2\n");
}

TEST(CompileKb, StrictlyPositiveCptsGiveNoClauses) {
    EXPECT_TRUE(compile_clauses(chain_network()).empty());
}

TEST(CompileKb, DeterministicRootIsAUnitClause) {
    const Network net({{0, "A", {"1", "2"}}}, {TabularCpt{0, {}, {0.0, 1.0}}});
    const auto clauses = compile_clauses(net);
    ASSERT_EQ(clauses.size(), 1u);
    EXPECT_EQ(clauses[0].literals, (std::vector<Literal>{is(0, 1)}));
    const auto kb = compile_kb(net);
    EXPECT_EQ(kb.fixed(0), 1);
}

TEST(CompileKb, NearZeroIsNotAConstraint) {
    const Network net({{0, "A", {"1", "2"}}}, {TabularCpt{0, {}, {1e-300, 1.0 - 1e-300}}});
    // 1 - 1e-300 rounds to exactly 1.0, so the row holds a one.
    ASSERT_EQ(1.0 - 1e-300, 1.0);
    EXPECT_EQ(compile_clauses(net).size(), 1u);
    const Network net2({{0, "A", {"1", "2"}}}, {TabularCpt{0, {}, {1e-12, 1.0 - 1e-12}}});
    EXPECT_TRUE(compile_clauses(net2).empty());
}

TEST(CompileKb, RowsGiveOnePositiveOrOnlyNegatives) {
    std::mt19937_64 rng(2);
    RandomNetworkOptions opt;
    opt.determinism = 0.5;
    for (int i = 0; i < 50; ++i) {
        const auto net = random_network(rng, opt);
        for (const auto& c : compile_clauses(net)) {
            const auto& head = c.literals.front();
            for (std::size_t j = 1; j < c.literals.size(); ++j) ASSERT_FALSE(c.literals[j].positive);
            const auto& parents = net.parents(head.var);
            ASSERT_EQ(c.literals.size(), parents.size() + 1);
            std::map<VarId, StateIndex> row;
            for (std::size_t j = 0; j < parents.size(); ++j) row[parents[j]] = c.literals[j + 1].state;
            const double p = cpt_prob(net, head.var, head.state, row);
            ASSERT_EQ(p, head.positive ? 1.0 : 0.0);
        }
    }
}

TEST(UnitResolution, ForcedValue) {
    auto kb = compile_kb(section5_network());
    EXPECT_EQ(kb.assert_literal(is(A, 0)), Propagation::ok);
    EXPECT_EQ(kb.fixed(C), kUnassigned);
}

TEST(UnitResolution, ForcedValueThenContradiction) {
    auto kb = compile_kb(section5_network());
    ASSERT_EQ(kb.assert_literal(is(A, 0)), Propagation::ok);
    ASSERT_EQ(kb.assert_literal(is(B, 0)), Propagation::ok);
    EXPECT_EQ(kb.fixed(C), 0);  // C = 1 forced
    EXPECT_FALSE(kb.possible(C, 1));
    EXPECT_EQ(kb.assert_literal(is(C, 1)), Propagation::contradiction);
}

TEST(UnitResolution, EmptyKbNeverPropagates) {
    KnowledgeBase kb({2, 3}, {});
    EXPECT_EQ(kb.assert_literal(is(0, 1)), Propagation::ok);
    EXPECT_EQ(kb.assert_literal(is_not(1, 0)), Propagation::ok);
    EXPECT_EQ(kb.fixed(1), kUnassigned);
    EXPECT_EQ(kb.domain_size(1), 2u);
}

TEST(UnitResolution, DomainCollapse) {
    KnowledgeBase on({3}, {});
    on.assert_literal(is_not(0, 0));
    on.assert_literal(is_not(0, 1));
    EXPECT_EQ(on.fixed(0), 2);
    EXPECT_EQ(on.assert_literal(is_not(0, 2)), Propagation::contradiction);

    // (X=0 ∨ Y≠2): with collapse off, shrinking Y to {2} by negatives does
    // not falsify Y≠2, so X stays open.
    const std::vector<Clause> clauses{{{is(0, 0), is_not(1, 2)}}};
    KnowledgeBase off({2, 3}, clauses, {.collapse_domains = false});
    off.assert_literal(is_not(1, 0));
    off.assert_literal(is_not(1, 1));
    EXPECT_EQ(off.fixed(0), kUnassigned);
    KnowledgeBase collapse({2, 3}, clauses);
    collapse.assert_literal(is_not(1, 0));
    collapse.assert_literal(is_not(1, 1));
    EXPECT_EQ(collapse.fixed(0), 0);
}

TEST(UnitResolution, NegativeLiteralOfSatisfiedStateIsANoOp) {
    KnowledgeBase kb({3}, {});
    kb.assert_literal(is_not(0, 1));
    const auto before = kb.snapshot();
    EXPECT_EQ(kb.assert_literal(is_not(0, 1)), Propagation::ok);
    EXPECT_EQ(kb.snapshot(), before);
}

TEST(Checkpoints, RetractRestoresExactState) {
    auto kb = compile_kb(section5_network());
    const auto fresh = kb.snapshot();
    const auto cp = kb.checkpoint();
    kb.assert_literal(is(A, 0));
    kb.assert_literal(is(B, 0));
    kb.retract_to(cp);
    EXPECT_EQ(kb.snapshot(), fresh);
}

TEST(Checkpoints, NestedUnwindLifo) {
    auto kb = compile_kb(section5_network());
    const auto outer = kb.checkpoint();
    kb.assert_literal(is(A, 0));
    const auto after_a = kb.snapshot();
    const auto inner = kb.checkpoint();
    kb.assert_literal(is(B, 0));
    kb.retract_to(inner);
    EXPECT_EQ(kb.snapshot(), after_a);
    kb.retract_to(outer);
    EXPECT_EQ(kb.snapshot(), compile_kb(section5_network()).snapshot());
    EXPECT_EQ(kb.open_checkpoints(), 0u);
}

TEST(Checkpoints, StaleTokensAreRejected) {
    auto kb = compile_kb(section5_network());
    const auto outer = kb.checkpoint();
    const auto inner = kb.checkpoint();
    kb.retract_to(outer);
    EXPECT_THROW(kb.retract_to(inner), KbError);
    EXPECT_THROW(kb.retract_to(outer), KbError);
    const auto again = kb.checkpoint();
    EXPECT_THROW(kb.retract_to(inner), KbError);  // same depth, different serial
    EXPECT_NO_THROW(kb.retract_to(again));
}

TEST(Checkpoints, ContradictionRollsBack) {
    auto kb = compile_kb(section5_network());
    kb.assert_literal(is(A, 0));
    const auto before = kb.snapshot();
    const auto cp = kb.checkpoint();
    kb.assert_literal(is(B, 0));
    ASSERT_EQ(kb.assert_literal(is(C, 2)), Propagation::contradiction);
    kb.retract_to(cp);
    EXPECT_EQ(kb.snapshot(), before);
    EXPECT_EQ(kb.recount(), kb.snapshot().falsified);
}

TEST(KbFuzz, ShortRunsOnRandomDeterministicNetworks) {
    std::mt19937_64 rng(17);
    RandomNetworkOptions opt;
    opt.determinism = 0.5;
    opt.min_vars = 3;
    for (int i = 0; i < 10; ++i) {
        const auto net = random_network(rng, opt);
        const auto out = fuzz_kb(net.cardinalities(), compile_clauses(net), 500, 100 + i);
        EXPECT_EQ(out.mismatches, 0u) << out.first_mismatch;
    }
}

TEST(KbSoundness, ContradictionImpliesZeroProbability) {
    std::mt19937_64 rng(23);
    RandomNetworkOptions opt;
    opt.determinism = 0.5;
    opt.max_vars = 8;
    std::size_t contradictions = 0;
    for (int i = 0; i < 100; ++i) {
        const auto net = random_network(rng, opt);
        auto kb = compile_kb(net);
        for (int trial = 0; trial < 10; ++trial) {
            const auto cp = kb.checkpoint();
            std::vector<Literal> lits;
            const std::size_t k = 1 + rng() % net.size();
            for (std::size_t j = 0; j < k; ++j) {
                const auto v = static_cast<VarId>(rng() % net.size());
                lits.push_back({v, static_cast<StateIndex>(rng() % net.cardinality(v)), (rng() % 3) != 0});
                if (kb.assert_literal(lits.back()) == Propagation::contradiction) {
                    ++contradictions;
                    ASSERT_FALSE(is_consistent_extension(net, lits));
                    break;
                }
            }
            kb.retract_to(cp);
        }
    }
    EXPECT_GT(contradictions, 0u);
}

TEST(KbSoundness, WorkedExampleOracle) {
    const auto net = section5_network();
    EXPECT_FALSE(is_consistent_extension(net, {is(A, 0), is(B, 0), is(C, 1)}));
    EXPECT_TRUE(is_consistent_extension(chain_network(), std::vector<Literal>{}));
}
