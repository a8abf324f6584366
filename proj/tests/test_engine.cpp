#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rcond/engine.hpp"
#include "rcond/random_network.hpp"
#include "support/oracles.hpp"

using namespace rcond;
using namespace rcond::testing;

namespace {

NodeId leaf_of(const Dtree& dt, VarId v) {
    for (const auto& n : dt.nodes()) {
        if (n.is_leaf() && n.leaf_var == v) return n.id;
    }
    return kNoNode;
}

Evidence ev_of(std::initializer_list<std::pair<const VarId, StateIndex>> items) { return Evidence{{items}}; }

}  // namespace

TEST(RcQuery, EmptyEvidenceIsOne) {
    for (const auto& net : {section5_network(), chain_network(), star_network(4)}) {
        const auto dt = build_dtree(net, min_fill_order(net));
        EXPECT_NEAR(rc_query(net, dt, {}).probability, 1.0, 1e-12);
        EXPECT_NEAR(rc_query(net, dt, {}, {.log_domain = true}).probability, 1.0, 1e-12);
    }
}

TEST(RcQuery, ImpossibleEvidenceIsZero) {
    const auto net = section5_network();
    const auto dt = build_dtree(net, min_fill_order(net));
    const auto ev = ev_of({{2, 2}});  // every row gives C=3 probability 0
    const double expected = brute_force_probability(net, ev);
    EXPECT_EQ(expected, 0.0);
    EXPECT_EQ(rc_query(net, dt, ev).probability, 0.0);
    const auto logr = rc_query(net, dt, ev, {.log_domain = true});
    EXPECT_EQ(logr.probability, 0.0);
    EXPECT_TRUE(std::isinf(logr.log_probability) && logr.log_probability < 0);
}

TEST(RcQuery, ChainMarginal) {
    const auto net = chain_network();
    // Pr(B=b0) = 0.3*0.9 + 0.7*0.2 = 0.41; Pr(C=c0) = 0.41*0.6 + 0.59*0.25
    const double expected = 0.41 * 0.6 + 0.59 * 0.25;
    for (const auto& order : {std::vector<VarId>{0, 1, 2}, std::vector<VarId>{0, 2, 1}, std::vector<VarId>{2, 1, 0}}) {
        const auto dt = build_dtree(net, order);
        for (auto policy : {CachePolicy::full(), CachePolicy::none(), CachePolicy::budget(2)}) {
            EXPECT_NEAR(rc_query(net, dt, ev_of({{2, 0}}), {.policy = policy}).probability, expected, 1e-15);
        }
    }
}

TEST(Lookup, Examples) {
    const auto net = section5_network();
    const auto dt = build_dtree(net, {0, 1, 2});
    RecursiveConditioner rc(net, dt);
    const NodeId lc = leaf_of(dt, 2);
    ASSERT_NE(lc, kNoNode);
    auto& rec = rc.mutable_recorder();

    EXPECT_EQ(rc.lookup(lc), 1.0);  // C unassigned

    rec.record(0, 0);
    rec.record(1, 0);
    rec.record(2, 0);
    EXPECT_EQ(rc.lookup(lc), 1.0);  // Pr(C=1 | A=1, B=1)
    rec.unrecord(0);
    rec.unrecord(1);
    rec.unrecord(2);

    rec.record(0, 1);
    rec.record(1, 0);
    rec.record(2, 1);
    EXPECT_DOUBLE_EQ(rc.lookup(lc), 0.8);  // Pr(C=2 | A=2, B=1)
    rec.unrecord(1);
    EXPECT_THROW((void)rc.lookup(lc), std::logic_error);
}

TEST(Lookup, ParentsAreAlwaysCutAboveLeaves) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto net = random_network(rng, {});
        const auto dt = build_dtree(net, min_fill_order(net));
        for (const auto& n : dt.nodes()) {
            if (!n.is_leaf()) continue;
            for (VarId p : net.parents(n.leaf_var)) ASSERT_TRUE(set_contains(n.acutset, p));
        }
        EXPECT_NO_THROW(RecursiveConditioner(net, dt));
    }
}

TEST(OracleEquivalence, RandomNetworksAllModes) {
    std::mt19937_64 rng(1234);
    RandomNetworkOptions opt;
    opt.max_vars = 9;
    opt.noisy_or = 0.3;
    for (int i = 0; i < 200; ++i) {
        opt.determinism = (i % 2 == 0) ? 0.0 : 0.4;
        const auto net = random_network(rng, opt);
        const auto ev = random_evidence(rng, net, 0.3);
        const double truth = brute_force_probability(net, ev);
        const auto dt = build_dtree(net, min_fill_order(net));
        auto kb = compile_kb(net);
        for (auto policy : {CachePolicy::full(), CachePolicy::none(), CachePolicy::budget(4)}) {
            for (bool with_kb : {false, true}) {
                for (bool log_domain : {false, true}) {
                    const auto r = rc_query(net, dt, ev, {policy, with_kb ? &kb : nullptr, log_domain});
                    if (truth == 0.0) {
                        ASSERT_EQ(r.probability, 0.0) << "instance " << i;
                    } else {
                        ASSERT_TRUE(rel_close(r.probability, truth, 1e-9))
                            << "instance " << i << " got " << r.probability << " want " << truth;
                    }
                }
            }
        }
    }
}

TEST(CachePolicies, BudgetExtremes) {
    std::mt19937_64 rng(77);
    RandomNetworkOptions opt;
    opt.min_vars = 6;
    for (int i = 0; i < 30; ++i) {
        const auto net = random_network(rng, opt);
        const auto dt = build_dtree(net, min_fill_order(net));
        const auto ev = random_evidence(rng, net, 0.2, 1.0);
        const auto full = rc_query(net, dt, ev);
        const auto none = rc_query(net, dt, ev, {.policy = CachePolicy::none()});
        const auto b0 = rc_query(net, dt, ev, {.policy = CachePolicy::budget(0)});
        const auto binf = rc_query(net, dt, ev, {.policy = CachePolicy::budget(~Cells{0})});
        EXPECT_EQ(b0.rc_calls, none.rc_calls);
        EXPECT_EQ(b0.cache_hits, 0u);
        EXPECT_EQ(binf.rc_calls, full.rc_calls);
        EXPECT_EQ(binf.cache_hits, full.cache_hits);
        EXPECT_LE(full.rc_calls, none.rc_calls);
        EXPECT_EQ(b0.probability, none.probability);
        EXPECT_EQ(binf.probability, full.probability);
    }
}

TEST(CachePolicies, BudgetPicksSmallestFirst) {
    // 4-chain with a live cache: budget below its size disables it.
    std::vector<Variable> vars;
    std::vector<Cpt> cpts;
    for (VarId v = 0; v < 4; ++v) {
        vars.push_back({v, std::string(1, static_cast<char>('A' + v)), {"0", "1"}});
        if (v == 0) {
            cpts.emplace_back(TabularCpt{0, {}, {0.5, 0.5}});
        } else {
            cpts.emplace_back(TabularCpt{v, {v - 1}, {0.7, 0.3, 0.4, 0.6}});
        }
    }
    const Network net(std::move(vars), std::move(cpts));
    const auto dt = dtree_from_shape(net, "(D (C (A B)))");
    const auto stats = dtree_stats(dt, net);
    ASSERT_GT(stats.cache_cells_live, 0u);
    const auto states = apply_policy(dt, net, CachePolicy::budget(stats.cache_cells_live - 1));
    const auto full = apply_policy(dt, net, CachePolicy::budget(stats.cache_cells_live));
    EXPECT_LT(std::count(states.begin(), states.end(), CacheState::live),
              std::count(full.begin(), full.end(), CacheState::live));
}

TEST(WorkBound, MissesNeverExceedContextSize) {
    std::mt19937_64 rng(99);
    RandomNetworkOptions opt;
    opt.min_vars = 5;
    for (int i = 0; i < 60; ++i) {
        const auto net = random_network(rng, opt);
        const auto dt = build_dtree(net, min_fill_order(net));
        const auto ev = random_evidence(rng, net, 0.2);
        const auto r = rc_query(net, dt, ev);
        Cells live = 0;
        for (const auto& n : dt.nodes()) {
            const auto misses = r.misses_per_node[static_cast<std::size_t>(n.id)];
            if (n.cache_state == CacheState::live) {
                live += net.instantiations(n.context);
                ASSERT_LE(misses, net.instantiations(n.context)) << "node " << n.id;
            } else {
                ASSERT_EQ(misses, 0u);
            }
        }
        ASSERT_EQ(live, dtree_stats(dt, net).cache_cells_live);
        ASSERT_LE(r.entries_written, live);
        ASSERT_EQ(r.entries_written, r.cache_misses);
    }
}

TEST(State, RecorderAndKbRestored) {
    std::mt19937_64 rng(5);
    RandomNetworkOptions opt;
    opt.determinism = 0.5;
    for (int i = 0; i < 40; ++i) {
        const auto net = random_network(rng, opt);
        const auto dt = build_dtree(net, min_fill_order(net));
        auto kb = compile_kb(net);
        const auto before = kb.snapshot();
        RecursiveConditioner rc(net, dt);
        for (int q = 0; q < 3; ++q) {
            const auto ev = random_evidence(rng, net, 0.4);
            (void)rc.run(ev, &kb, q == 1);
            ASSERT_TRUE(rc.recorder().evidence_only());
            for (auto [v, s] : ev.assignments) ASSERT_EQ(rc.recorder().value(v), s);
            ASSERT_EQ(kb.snapshot(), before);
            ASSERT_EQ(kb.open_checkpoints(), 0u);
        }
    }
}

TEST(State, RepeatedQueriesAreIndependent) {
    const auto net = chain_network();
    const auto dt = build_dtree(net, {0, 1, 2});
    RecursiveConditioner rc(net, dt);
    const auto a = rc.run(ev_of({{2, 0}}));
    (void)rc.run(ev_of({{0, 1}}));
    const auto b = rc.run(ev_of({{2, 0}}));
    EXPECT_EQ(a.probability, b.probability);
    EXPECT_EQ(a.rc_calls, b.rc_calls);
}

TEST(KbIntegration, SameAnswerFewerCalls) {
    std::mt19937_64 rng(808);
    RandomNetworkOptions opt;
    opt.determinism = 0.5;
    opt.min_vars = 5;
    std::size_t with_skips = 0;
    for (int i = 0; i < 80; ++i) {
        const auto net = random_network(rng, opt);
        const auto dt = build_dtree(net, min_fill_order(net));
        const auto ev = random_evidence(rng, net, 0.2);
        auto kb = compile_kb(net);
        const auto plain = rc_query(net, dt, ev);
        const auto pruned = rc_query(net, dt, ev, {.kb = &kb});
        if (plain.probability == 0.0) {
            ASSERT_EQ(pruned.probability, 0.0);
        } else {
            ASSERT_TRUE(rel_close(plain.probability, pruned.probability, 1e-12));
        }
        ASSERT_LE(pruned.rc_calls, plain.rc_calls);
        EXPECT_TRUE(pruned.kb_enabled);
        EXPECT_FALSE(plain.kb_enabled);
        with_skips += pruned.kb_skips > 0;
    }
    EXPECT_GT(with_skips, 0u);
}

TEST(KbIntegration, EvidenceContradictionShortCircuits) {
    const auto net = section5_network();
    const auto dt = build_dtree(net, min_fill_order(net));
    auto kb = compile_kb(net);
    const auto r = rc_query(net, dt, ev_of({{0, 0}, {1, 0}, {2, 1}}), {.kb = &kb});
    EXPECT_TRUE(r.kb_evidence_contradiction);
    EXPECT_EQ(r.probability, 0.0);
    EXPECT_EQ(r.rc_calls, 0u);
    EXPECT_EQ(brute_force_probability(net, ev_of({{0, 0}, {1, 0}, {2, 1}})), 0.0);
}

TEST(LogDomain, TinyProbabilitiesSurvive) {
    // 400 independent binary roots with Pr = 0.1 each: 1e-400 underflows
    // a double but not its logarithm.
    std::vector<Variable> vars;
    std::vector<Cpt> cpts;
    Evidence ev;
    for (VarId v = 0; v < 400; ++v) {
        vars.push_back({v, "V" + std::to_string(v), {"0", "1"}});
        cpts.emplace_back(TabularCpt{v, {}, {0.1, 0.9}});
        ev.assignments[v] = 0;
    }
    const Network net(std::move(vars), std::move(cpts));
    const auto dt = build_dtree(net, min_fill_order(net));
    const auto lin = rc_query(net, dt, ev);
    const auto lg = rc_query(net, dt, ev, {.log_domain = true});
    EXPECT_EQ(lin.probability, 0.0);
    EXPECT_NEAR(lg.log10_probability(), -400.0, 1e-9);
}

TEST(BruteForce, Examples) {
    const Network single({{0, "X", {"0", "1"}}}, {TabularCpt{0, {}, {0.4, 0.6}}});
    EXPECT_DOUBLE_EQ(brute_force_probability(single, ev_of({{0, 0}})), 0.4);
    EXPECT_NEAR(brute_force_probability(chain_network(), ev_of({{2, 0}})), 0.41 * 0.6 + 0.59 * 0.25, 1e-15);
    EXPECT_NEAR(brute_force_probability(chain_network(), {}), 1.0, 1e-15);
    EXPECT_THROW((void)brute_force_probability(star_network(18), {}), ModelError);
}

TEST(StarNetwork, NoisyOrMatchesExpandedTable) {
    for (std::size_t n : {1u, 3u, 6u}) {
        const auto nor = star_network(n, true);
        const auto tab = star_network(n, false);
        const auto dt_nor = dtree_from_shape(nor, star_shape(n));
        const auto dt_tab = dtree_from_shape(tab, star_shape(n));
        for (StateIndex y = 0; y < 2; ++y) {
            const auto ev = ev_of({{static_cast<VarId>(n), y}});
            const double a = rc_query(nor, dt_nor, ev).probability;
            const double b = rc_query(tab, dt_tab, ev).probability;
            EXPECT_TRUE(rel_close(a, b, 1e-12));
            EXPECT_TRUE(rel_close(a, brute_force_probability(tab, ev), 1e-12));
        }
    }
}
