// Command-line front end for the recursive conditioning engine.
//
//   rcond query --net NET.json [--evidence EV.json] [--cache full|none|budget:N]
//               [--kb on|off] [--log-space on|off] [--dtree-in F] [--dtree-out F] [--dtree-dot F]
//   rcond stats --net NET.json [--dtree-in F] [--dtree-out F] [--dtree-dot F]
//   rcond kb    --net NET.json
//   rcond bench [--instances N] [--seed S] [--max-vars N] [--max-states N]
//               [--determinism F] [--oracle] ...
//
// Exit status 0 on success, 2 on any parse or validation error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "rcond/rcond.hpp"

namespace {

using rcond::CachePolicy;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

CachePolicy parse_cache(const std::string& s) {
    if (s == "full") return CachePolicy::full();
    if (s == "none") return CachePolicy::none();
    if (s.rfind("budget:", 0) == 0) {
        const std::string n = s.substr(7);
        if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos) {
            throw UsageError("--cache budget needs a cell count, e.g. budget:1000");
        }
        return CachePolicy::budget(std::stoull(n));
    }
    throw UsageError("--cache must be full, none or budget:N");
}

bool parse_switch(const std::string& s, const char* flag) {
    if (s == "on") return true;
    if (s == "off") return false;
    throw UsageError(std::string(flag) + " must be on or off");
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << text;
}

struct DtreeFlags {
    std::string dtree_in;
    std::string dtree_out;
    std::string dtree_dot;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--dtree-in", dtree_in, "Load the dtree from a JSON file instead of min-fill");
        cmd->add_option("--dtree-out", dtree_out, "Write the dtree as JSON");
        cmd->add_option("--dtree-dot", dtree_dot, "Write the dtree as Graphviz DOT");
    }

    [[nodiscard]] rcond::Dtree load(const rcond::Network& net) const {
        if (!dtree_in.empty()) return rcond::parse_dtree(rcond::read_text_file(dtree_in), net);
        return rcond::build_dtree(net, rcond::min_fill_order(net));
    }

    void export_dtree(const rcond::Dtree& dt, const rcond::Network& net) const {
        if (!dtree_out.empty()) write_file(dtree_out, rcond::dtree_to_json(dt, net).dump(2) + "\n");
        if (!dtree_dot.empty()) write_file(dtree_dot, rcond::dtree_to_dot(dt, net));
    }
};

nlohmann::json stats_json(const rcond::Network& net, const rcond::Dtree& dt, const std::vector<rcond::VarId>& order) {
    const auto clauses = rcond::compile_clauses(net);
    rcond::KbSize size{clauses.size(), 0};
    for (const auto& c : clauses) size.literals += c.literals.size();
    nlohmann::json j;
    j["variables"] = net.size();
    j["dtree"] = rcond::to_json(rcond::dtree_stats(dt, net));
    j["space"] = rcond::to_json(rcond::space_report(dt, net, order));
    j["kb_size"] = rcond::to_json(size);
    std::size_t cpt_cells = 0;
    for (const auto& c : net.cpts()) cpt_cells += rcond::cpt_storage_cells(c);
    j["cpt_cells"] = cpt_cells;
    return j;
}

struct QueryCmd {
    std::string net_path;
    std::string evidence_path;
    std::string cache = "full";
    std::string kb = "off";
    std::string log_space = "off";
    std::optional<std::uint64_t> seed;
    DtreeFlags dtree;

    int run() const {
        const auto policy = parse_cache(cache);
        const bool use_kb = parse_switch(kb, "--kb");
        const bool use_log = parse_switch(log_space, "--log-space");
        const auto net = rcond::load_network(net_path);
        rcond::Evidence ev;
        if (!evidence_path.empty()) ev = rcond::parse_evidence(rcond::read_text_file(evidence_path), net);
        const auto order = rcond::min_fill_order(net);
        const auto dt = dtree.load(net);
        dtree.export_dtree(dt, net);

        std::optional<rcond::KnowledgeBase> knowledge;
        if (use_kb) knowledge = rcond::compile_kb(net);

        const auto start = std::chrono::steady_clock::now();
        const auto result =
            rcond::rc_query(net, dt, ev, {policy, knowledge ? &*knowledge : nullptr, use_log});
        const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

        auto j = rcond::to_json(result);
        j["network"] = net_path;
        auto stats = stats_json(net, dt, order);
        j["dtree"] = stats["dtree"];
        j["space"] = stats["space"];
        j["kb_size"] = stats["kb_size"];
        j["wall_time_ms"] = elapsed.count();
        if (seed) j["seed"] = *seed;
        std::cout << j.dump(2) << '\n';
        return 0;
    }
};

struct StatsCmd {
    std::string net_path;
    DtreeFlags dtree;

    int run() const {
        const auto net = rcond::load_network(net_path);
        const auto order = rcond::min_fill_order(net);
        const auto dt = dtree.load(net);
        dtree.export_dtree(dt, net);
        auto j = stats_json(net, dt, order);
        j["network"] = net_path;
        std::cout << j.dump(2) << '\n';
        return 0;
    }
};

struct KbCmd {
    std::string net_path;

    int run() const {
        const auto net = rcond::load_network(net_path);
        std::cout << rcond::dump_clauses(net, rcond::compile_clauses(net));
        return 0;
    }
};

struct BenchCmd {
    std::size_t instances = 100;
    std::uint64_t seed = 1;
    std::size_t max_vars = 10;
    std::size_t max_states = 4;
    std::size_t max_parents = 3;
    double determinism = 0.0;
    double noisy_or = 0.0;
    double evidence_fraction = 0.3;
    bool oracle = false;
    std::string cache = "full";
    std::string log_space = "off";

    int run() const {
        const auto policy = parse_cache(cache);
        const bool use_log = parse_switch(log_space, "--log-space");
        if (max_vars == 0) throw UsageError("--max-vars must be positive");
        std::mt19937_64 rng(seed);
        rcond::RandomNetworkOptions opt;
        opt.max_vars = max_vars;
        opt.max_states = max_states;
        opt.max_parents = max_parents;
        opt.determinism = determinism;
        opt.noisy_or = noisy_or;

        for (std::size_t i = 0; i < instances; ++i) {
            nlohmann::json line;
            line["instance"] = i;
            try {
                const auto net = rcond::random_network(rng, opt);
                const auto ev = rcond::random_evidence(rng, net, evidence_fraction);
                const auto dt = rcond::build_dtree(net, rcond::min_fill_order(net));
                auto kb = rcond::compile_kb(net);
                const auto off = rcond::rc_query(net, dt, ev, {policy, nullptr, use_log});
                const auto on = rcond::rc_query(net, dt, ev, {policy, &kb, use_log});
                const auto stats = rcond::dtree_stats(dt, net);
                line["variables"] = net.size();
                line["evidence"] = ev.assignments.size();
                line["width"] = stats.width;
                line["prob_nokb"] = off.probability;
                line["prob_kb"] = on.probability;
                const double scale = std::max(std::abs(off.probability), std::abs(on.probability));
                line["agree"] = std::abs(off.probability - on.probability) <= 1e-12 * scale;
                line["rc_calls_nokb"] = off.rc_calls;
                line["rc_calls_kb"] = on.rc_calls;
                line["ratio"] = on.rc_calls == 0 ? nlohmann::json(nullptr)
                                                 : nlohmann::json(static_cast<double>(off.rc_calls) /
                                                                  static_cast<double>(on.rc_calls));
                line["kb_skips"] = on.kb_skips;
                line["kb_evidence_contradiction"] = on.kb_evidence_contradiction;
                line["kb_size"] = rcond::to_json(rcond::KbSize{kb.clause_count(), kb.literal_count()});
                if (oracle) {
                    try {
                        const double exact = rcond::brute_force_probability(net, ev);
                        line["oracle"] = exact;
                        const double denom = std::max(std::abs(exact), std::abs(off.probability));
                        line["oracle_delta"] = denom == 0.0 ? 0.0 : std::abs(off.probability - exact) / denom;
                    } catch (const rcond::ModelError& e) {
                        line["oracle"] = nullptr;
                        line["oracle_skipped"] = e.what();
                    }
                }
            } catch (const std::exception& e) {
                line["error"] = e.what();
            }
            std::cout << line.dump() << '\n';
        }
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact Bayesian network inference by recursive conditioning"};
    app.require_subcommand(1);

    QueryCmd query;
    auto* q = app.add_subcommand("query", "Compute the probability of evidence");
    q->add_option("--net", query.net_path, "Network JSON")->required();
    q->add_option("--evidence", query.evidence_path, "Evidence JSON ({\"var\": \"state\"})");
    q->add_option("--cache", query.cache, "full | none | budget:N");
    q->add_option("--kb", query.kb, "Unit-resolution pruning: on | off");
    q->add_option("--log-space", query.log_space, "Log-domain arithmetic: on | off");
    q->add_option("--seed", query.seed, "Recorded in the report");
    query.dtree.add_to(q);

    StatsCmd stats;
    auto* s = app.add_subcommand("stats", "Dtree widths, cache sizes and space-model cell counts");
    s->add_option("--net", stats.net_path, "Network JSON")->required();
    stats.dtree.add_to(s);

    KbCmd kb;
    auto* k = app.add_subcommand("kb", "Dump the clauses compiled from 0/1 CPT entries");
    k->add_option("--net", kb.net_path, "Network JSON")->required();

    BenchCmd bench;
    auto* b = app.add_subcommand("bench", "Random instances, KB on/off, one JSON line each");
    b->add_option("--instances", bench.instances);
    b->add_option("--seed", bench.seed);
    b->add_option("--max-vars", bench.max_vars);
    b->add_option("--max-states", bench.max_states);
    b->add_option("--max-parents", bench.max_parents);
    b->add_option("--determinism", bench.determinism, "Fraction of CPT cells forced to zero")->check(CLI::Range(0.0, 1.0));
    b->add_option("--noisy-or", bench.noisy_or, "Fraction of eligible CPTs made noisy-or")->check(CLI::Range(0.0, 1.0));
    b->add_option("--evidence-fraction", bench.evidence_fraction)->check(CLI::Range(0.0, 1.0));
    b->add_flag("--oracle", bench.oracle, "Compare against brute-force enumeration");
    b->add_option("--cache", bench.cache, "full | none | budget:N");
    b->add_option("--log-space", bench.log_space, "on | off");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "rcond: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*q) return query.run();
        if (*s) return stats.run();
        if (*k) return kb.run();
        if (*b) return bench.run();
    } catch (const std::exception& e) {
        std::cerr << "rcond: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
