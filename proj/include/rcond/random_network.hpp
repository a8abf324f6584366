#ifndef RCOND_RANDOM_NETWORK_HPP_
#define RCOND_RANDOM_NETWORK_HPP_

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rcond/model.hpp"

namespace rcond {

struct RandomNetworkOptions {
    std::size_t min_vars = 1;
    std::size_t max_vars = 10;
    std::size_t max_states = 4;
    std::size_t max_parents = 3;
    /// Probability that a CPT cell is forced to zero (each row keeps at least one nonzero).
    double determinism = 0.0;
    /// Probability that a binary child with parents gets a noisy-or CPT.
    double noisy_or = 0.0;
};

namespace detail {

inline std::vector<double> random_row(std::mt19937_64& rng, std::size_t k, double determinism) {
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    std::bernoulli_distribution zero(determinism);
    std::vector<double> row(k, 0.0);
    std::size_t nonzero = 0;
    for (auto& x : row) {
        if (!zero(rng)) {
            x = weight(rng);
            ++nonzero;
        }
    }
    if (nonzero == 0) row[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (auto& x : row) x /= sum;
    return row;
}

}  // namespace detail

/// A random DAG with random CPTs. Variables are generated in topological
/// order and then relabelled by a random permutation, so ids carry no order.
inline Network random_network(std::mt19937_64& rng, const RandomNetworkOptions& opt) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(opt.min_vars, opt.max_vars)(rng);
    std::vector<std::size_t> cards(n);
    std::bernoulli_distribution singleton(0.05);
    for (auto& c : cards) {
        c = singleton(rng) ? 1 : std::uniform_int_distribution<std::size_t>(2, std::max<std::size_t>(2, opt.max_states))(rng);
    }
    // topo position -> id
    std::vector<VarId> label(n);
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);

    std::vector<Variable> vars(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        auto& v = vars[static_cast<std::size_t>(label[pos])];
        v.id = label[pos];
        v.name = "V" + std::to_string(v.id);
        for (std::size_t s = 0; s < cards[pos]; ++s) v.states.push_back("s" + std::to_string(s));
    }

    std::vector<Cpt> cpts;
    std::bernoulli_distribution noisy(opt.noisy_or);
    std::bernoulli_distribution zero(opt.determinism);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t pos = 0; pos < n; ++pos) {
        const VarId child = label[pos];
        std::vector<std::size_t> earlier(pos);
        std::iota(earlier.begin(), earlier.end(), 0);
        std::shuffle(earlier.begin(), earlier.end(), rng);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, std::min(pos, opt.max_parents))(rng);
        std::vector<VarId> parents;
        for (std::size_t i = 0; i < k; ++i) parents.push_back(label[earlier[i]]);

        if (cards[pos] == 2 && !parents.empty() && noisy(rng)) {
            NoisyOrCpt cpt{child, parents, {}, {}, zero(rng) ? 0.0 : 0.3 * unit(rng)};
            for (VarId p : parents) {
                const auto pc = vars[static_cast<std::size_t>(p)].states.size();
                cpt.trigger.push_back(static_cast<StateIndex>(std::uniform_int_distribution<std::size_t>(0, pc - 1)(rng)));
                cpt.inhibitor.push_back(zero(rng) ? 0.0 : unit(rng));
            }
            cpts.emplace_back(std::move(cpt));
            continue;
        }
        std::size_t rows = 1;
        for (VarId p : parents) rows *= vars[static_cast<std::size_t>(p)].states.size();
        TabularCpt cpt{child, parents, {}};
        cpt.entries.reserve(rows * cards[pos]);
        for (std::size_t r = 0; r < rows; ++r) {
            auto row = detail::random_row(rng, cards[pos], opt.determinism);
            cpt.entries.insert(cpt.entries.end(), row.begin(), row.end());
        }
        cpts.emplace_back(std::move(cpt));
    }
    return Network(std::move(vars), std::move(cpts));
}

/// Each variable is observed with probability `fraction`. With probability
/// `from_sample` the observed values come from one forward sample (so the
/// evidence is possible); otherwise they are uniform and may be impossible.
inline Evidence random_evidence(std::mt19937_64& rng, const Network& net, double fraction, double from_sample = 0.5) {
    const std::size_t n = net.size();
    std::vector<StateIndex> sample(n, kUnassigned);
    const bool sampled = std::bernoulli_distribution(from_sample)(rng);
    if (sampled) {
        // Forward sampling needs a topological order.
        std::vector<std::size_t> pending(n);
        std::vector<std::vector<VarId>> children(n);
        for (std::size_t v = 0; v < n; ++v) {
            pending[v] = net.parents(static_cast<VarId>(v)).size();
            for (VarId p : net.parents(static_cast<VarId>(v))) children[static_cast<std::size_t>(p)].push_back(static_cast<VarId>(v));
        }
        std::vector<VarId> ready;
        for (std::size_t v = 0; v < n; ++v) {
            if (pending[v] == 0) ready.push_back(static_cast<VarId>(v));
        }
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        while (!ready.empty()) {
            const VarId v = ready.back();
            ready.pop_back();
            double u = unit(rng);
            const std::size_t k = net.cardinality(v);
            StateIndex pick = static_cast<StateIndex>(k - 1);
            for (std::size_t s = 0; s < k; ++s) {
                sample[static_cast<std::size_t>(v)] = static_cast<StateIndex>(s);
                const double p = cpt_prob_assigned(net, v, sample);
                if (u < p) {
                    pick = static_cast<StateIndex>(s);
                    break;
                }
                u -= p;
            }
            // Guard against rounding walking past the last nonzero state.
            while (pick > 0) {
                sample[static_cast<std::size_t>(v)] = pick;
                if (cpt_prob_assigned(net, v, sample) > 0.0) break;
                --pick;
            }
            sample[static_cast<std::size_t>(v)] = pick;
            for (VarId c : children[static_cast<std::size_t>(v)]) {
                if (--pending[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
            }
        }
    }
    Evidence ev;
    std::bernoulli_distribution observe(fraction);
    for (std::size_t v = 0; v < n; ++v) {
        if (!observe(rng)) continue;
        ev.assignments[static_cast<VarId>(v)] =
            sampled ? sample[v]
                    : static_cast<StateIndex>(
                          std::uniform_int_distribution<std::size_t>(0, net.cardinality(static_cast<VarId>(v)) - 1)(rng));
    }
    return ev;
}

}  // namespace rcond

#endif  // RCOND_RANDOM_NETWORK_HPP_
