#ifndef RCOND_ENGINE_HPP_
#define RCOND_ENGINE_HPP_

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "rcond/dtree.hpp"
#include "rcond/kb.hpp"
#include "rcond/model.hpp"

namespace rcond {

enum class Provenance : std::uint8_t { unassigned, evidence, cutset };

/// Current instantiation seen by LOOKUP and by cache indexing: the evidence
/// plus whatever cutset values the recursion has recorded.
class Recorder {
public:
    explicit Recorder(std::size_t variables)
        : value_(variables, kUnassigned), provenance_(variables, Provenance::unassigned) {}

    void set_evidence(const Evidence& ev) {
        std::fill(value_.begin(), value_.end(), kUnassigned);
        std::fill(provenance_.begin(), provenance_.end(), Provenance::unassigned);
        for (auto [v, s] : ev.assignments) {
            value_[static_cast<std::size_t>(v)] = s;
            provenance_[static_cast<std::size_t>(v)] = Provenance::evidence;
        }
    }

    void record(VarId v, StateIndex s) {
        assert(provenance_[static_cast<std::size_t>(v)] == Provenance::unassigned);
        value_[static_cast<std::size_t>(v)] = s;
        provenance_[static_cast<std::size_t>(v)] = Provenance::cutset;
    }

    void unrecord(VarId v) {
        assert(provenance_[static_cast<std::size_t>(v)] == Provenance::cutset);
        value_[static_cast<std::size_t>(v)] = kUnassigned;
        provenance_[static_cast<std::size_t>(v)] = Provenance::unassigned;
    }

    [[nodiscard]] bool assigned(VarId v) const { return value_[static_cast<std::size_t>(v)] != kUnassigned; }
    [[nodiscard]] StateIndex value(VarId v) const { return value_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] Provenance provenance(VarId v) const { return provenance_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] std::span<const StateIndex> assignment() const { return value_; }

    /// No cutset value is currently recorded.
    [[nodiscard]] bool evidence_only() const {
        return std::none_of(provenance_.begin(), provenance_.end(),
                            [](Provenance p) { return p == Provenance::cutset; });
    }

private:
    std::vector<StateIndex> value_;
    std::vector<Provenance> provenance_;
};

enum class CacheMode { full, none, budget };

struct CachePolicy {
    CacheMode mode = CacheMode::full;
    Cells max_cells = 0;  ///< budget mode only

    static CachePolicy full() { return {CacheMode::full, 0}; }
    static CachePolicy none() { return {CacheMode::none, 0}; }
    static CachePolicy budget(Cells cells) { return {CacheMode::budget, cells}; }
};

/// Per-node cache states under a policy. Dead and exempt nodes keep their
/// state; budget mode enables live caches smallest-first (ties by node id)
/// while the total stays within the budget.
inline std::vector<CacheState> apply_policy(const Dtree& dt, const Network& net, CachePolicy policy) {
    std::vector<CacheState> out;
    out.reserve(dt.size());
    for (const auto& n : dt.nodes()) out.push_back(n.cache_state);
    if (policy.mode == CacheMode::full) return out;

    std::vector<std::pair<Cells, NodeId>> candidates;
    for (const auto& n : dt.nodes()) {
        if (n.cache_state == CacheState::live) {
            out[static_cast<std::size_t>(n.id)] = CacheState::disabled;
            candidates.emplace_back(net.instantiations(n.context), n.id);
        }
    }
    if (policy.mode == CacheMode::none) return out;

    std::sort(candidates.begin(), candidates.end());
    Cells used = 0;
    for (auto [cells, id] : candidates) {
        if (cells > policy.max_cells - used) break;
        used += cells;
        out[static_cast<std::size_t>(id)] = CacheState::live;
    }
    return out;
}

struct QueryOptions {
    CachePolicy policy = CachePolicy::full();
    /// When set, cutset instantiations that unit resolution refutes are skipped.
    /// The KB is checkpointed on entry and restored before returning.
    KnowledgeBase* kb = nullptr;
    bool log_domain = false;
};

struct QueryResult {
    double probability = 0.0;
    double log_probability = -std::numeric_limits<double>::infinity();  ///< natural log
    std::uint64_t rc_calls = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t entries_written = 0;
    std::uint64_t kb_skips = 0;
    bool kb_enabled = false;
    bool kb_evidence_contradiction = false;
    bool log_domain = false;
    /// Cache misses per dtree node id (zero for nodes without a live cache).
    std::vector<std::uint64_t> misses_per_node;

    [[nodiscard]] double log10_probability() const { return log_probability / std::log(10.0); }
};

namespace detail {

struct LinearDomain {
    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double mul(double a, double b) { return a * b; }
    static double add(double a, double b) { return a + b; }
    static double from_prob(double p) { return p; }
};

/// Values are natural logs; -inf is exact zero.
struct LogDomain {
    static double zero() { return -std::numeric_limits<double>::infinity(); }
    static double one() { return 0.0; }
    static double mul(double a, double b) {
        if (a == zero() || b == zero()) return zero();
        return a + b;
    }
    static double add(double a, double b) {
        if (a == zero()) return b;
        if (b == zero()) return a;
        const double hi = std::max(a, b);
        return hi + std::log1p(std::exp(std::min(a, b) - hi));
    }
    static double from_prob(double p) { return p == 0.0 ? zero() : std::log(p); }
};

}  // namespace detail

/// Recursive conditioning over an annotated dtree.
///
/// The network and dtree are shared read-only; everything mutable (recorder,
/// caches, counters) belongs to this object, so one instance serves one
/// query at a time.
class RecursiveConditioner {
public:
    RecursiveConditioner(const Network& net, const Dtree& dt, CachePolicy policy = CachePolicy::full())
        : net_(net), dt_(dt), recorder_(net.size()) {
        if (!dt.annotated()) throw DtreeError("dtree is not annotated");
        const auto states = apply_policy(dt, net, policy);
        nodes_.resize(dt.size());
        for (const auto& n : dt.nodes()) {
            auto& info = nodes_[static_cast<std::size_t>(n.id)];
            info.leaf_var = n.is_leaf() ? n.leaf_var : -1;
            info.left = n.left;
            info.right = n.right;
            info.cutset = n.cutset;
            if (n.is_leaf()) {
                // Every parent must be cut above the leaf (or be evidence);
                // otherwise LOOKUP could run with a parent unassigned.
                for (VarId p : net.parents(n.leaf_var)) {
                    if (!set_contains(n.acutset, p)) {
                        throw std::logic_error("malformed dtree: parent '" + net.variable(p).name + "' of '" +
                                               net.variable(n.leaf_var).name + "' is not cut above its leaf");
                    }
                }
                continue;
            }
            if (states[static_cast<std::size_t>(n.id)] != CacheState::live) continue;
            info.cached = true;
            info.context = n.context;
            info.strides.assign(n.context.size(), 1);
            Cells size = 1;
            for (std::size_t i = n.context.size(); i-- > 0;) {
                info.strides[i] = static_cast<std::size_t>(size);
                size = saturating_mul(size, net.cardinality(n.context[i]));
            }
            info.cells = size;
            info.dense = size <= kDenseLimit;
        }
    }

    /// Probability of `ev`. The recorder returns to the evidence-only state
    /// and the KB (if any) to its entry state.
    QueryResult run(const Evidence& ev, KnowledgeBase* kb = nullptr, bool log_domain = false) {
        validate_evidence(net_, ev);
        QueryResult r;
        r.kb_enabled = kb != nullptr;
        r.log_domain = log_domain;
        r.misses_per_node.assign(dt_.size(), 0);
        result_ = &r;
        kb_ = kb;

        recorder_.set_evidence(ev);
        for (auto& info : nodes_) {
            info.free.clear();
            for (VarId v : info.cutset) {
                if (!recorder_.assigned(v)) info.free.push_back(v);
            }
            info.odometer.assign(info.free.size(), 0);
            if (info.cached) {
                if (info.dense) {
                    info.table.assign(static_cast<std::size_t>(info.cells), kMiss);
                } else {
                    info.sparse.clear();
                }
            }
        }

        std::optional<KnowledgeBase::Checkpoint> entry;
        bool refuted = false;
        if (kb != nullptr) {
            entry = kb->checkpoint();
            refuted = kb->base_contradiction();
            for (auto [v, s] : ev.assignments) {
                if (refuted) break;
                refuted = kb->assert_literal(is(v, s)) == Propagation::contradiction;
            }
        }

        if (refuted) {
            r.kb_evidence_contradiction = true;
            r.probability = 0.0;
        } else if (log_domain) {
            r.log_probability = recurse<detail::LogDomain>(dt_.root());
            r.probability = std::exp(r.log_probability);
        } else {
            r.probability = recurse<detail::LinearDomain>(dt_.root());
            r.log_probability = detail::LogDomain::from_prob(r.probability);
        }

        if (entry) kb->retract_to(*entry);
        result_ = nullptr;
        kb_ = nullptr;
        return r;
    }

    [[nodiscard]] const Recorder& recorder() const { return recorder_; }

    /// Pr(x|u) for the leaf's variable under the current record, or 1 when
    /// the variable is unassigned.
    [[nodiscard]] double lookup(NodeId leaf) const {
        const VarId x = nodes_[static_cast<std::size_t>(leaf)].leaf_var;
        if (!recorder_.assigned(x)) return 1.0;
        for (VarId p : net_.parents(x)) {
            if (!recorder_.assigned(p)) {
                throw std::logic_error("LOOKUP with unassigned parent '" + net_.variable(p).name + "'");
            }
        }
        return cpt_prob_assigned(net_, x, recorder_.assignment());
    }

    Recorder& mutable_recorder() { return recorder_; }

private:
    static constexpr Cells kDenseLimit = Cells{1} << 20;
    static constexpr double kMiss = std::numeric_limits<double>::quiet_NaN();

    struct NodeInfo {
        VarId leaf_var = -1;
        NodeId left = kNoNode;
        NodeId right = kNoNode;
        VarSet cutset;
        bool cached = false;
        bool dense = true;
        VarSet context;
        std::vector<std::size_t> strides;
        Cells cells = 0;
        std::vector<double> table;
        std::unordered_map<std::uint64_t, double> sparse;
        // per-query scratch
        std::vector<VarId> free;
        std::vector<StateIndex> odometer;
    };

    [[nodiscard]] std::uint64_t context_key(const NodeInfo& info) const {
        std::uint64_t key = 0;
        for (std::size_t i = 0; i < info.context.size(); ++i) {
            key += static_cast<std::uint64_t>(recorder_.value(info.context[i])) * info.strides[i];
        }
        return key;
    }

    template <typename Domain>
    double leaf_value(VarId x) const {
        if (!recorder_.assigned(x)) return Domain::one();
        return Domain::from_prob(cpt_prob_assigned(net_, x, recorder_.assignment()));
    }

    // Leaves are evaluated in place; they still count as calls.
    template <typename Domain>
    double child_value(NodeId c) {
        const NodeInfo& info = nodes_[static_cast<std::size_t>(c)];
        if (info.leaf_var >= 0) {
            ++result_->rc_calls;
            return leaf_value<Domain>(info.leaf_var);
        }
        return recurse<Domain>(c);
    }

    template <typename Domain>
    double recurse(NodeId t) {
        ++result_->rc_calls;
        NodeInfo& info = nodes_[static_cast<std::size_t>(t)];
        if (info.leaf_var >= 0) return leaf_value<Domain>(info.leaf_var);

        std::uint64_t key = 0;
        if (info.cached) {
            key = context_key(info);
            if (info.dense) {
                const double hit = info.table[static_cast<std::size_t>(key)];
                if (!std::isnan(hit)) {
                    ++result_->cache_hits;
                    return hit;
                }
            } else if (auto it = info.sparse.find(key); it != info.sparse.end()) {
                ++result_->cache_hits;
                return it->second;
            }
            ++result_->cache_misses;
            ++result_->misses_per_node[static_cast<std::size_t>(t)];
        }

        double p = Domain::zero();
        auto& free = info.free;
        auto& odo = info.odometer;
        if (free.size() == 1 && kb_ == nullptr) {
            const VarId v = free[0];
            const auto k = static_cast<StateIndex>(net_.cardinality(v));
            for (StateIndex s = 0; s < k; ++s) {
                recorder_.record(v, s);
                p = Domain::add(p, Domain::mul(child_value<Domain>(info.left), child_value<Domain>(info.right)));
                recorder_.unrecord(v);
            }
        } else {
            std::fill(odo.begin(), odo.end(), 0);
            for (;;) {
                for (std::size_t i = 0; i < free.size(); ++i) recorder_.record(free[i], odo[i]);
                if (kb_ != nullptr) {
                    const auto cp = kb_->checkpoint();
                    bool refuted = false;
                    for (std::size_t i = 0; i < free.size() && !refuted; ++i) {
                        refuted = kb_->assert_literal(is(free[i], odo[i])) == Propagation::contradiction;
                    }
                    if (refuted) {
                        ++result_->kb_skips;
                    } else {
                        p = Domain::add(p, Domain::mul(child_value<Domain>(info.left), child_value<Domain>(info.right)));
                    }
                    kb_->retract_to(cp);
                } else {
                    p = Domain::add(p, Domain::mul(child_value<Domain>(info.left), child_value<Domain>(info.right)));
                }
                for (VarId v : free) recorder_.unrecord(v);

                std::size_t i = free.size();
                while (i-- > 0) {
                    if (static_cast<std::size_t>(++odo[i]) < net_.cardinality(free[i])) break;
                    odo[i] = 0;
                }
                if (i == static_cast<std::size_t>(-1)) break;
            }
        }

        if (info.cached) {
            if (info.dense) {
                info.table[static_cast<std::size_t>(key)] = p;
            } else {
                info.sparse.emplace(key, p);
            }
            ++result_->entries_written;
        }
        return p;
    }

    const Network& net_;
    const Dtree& dt_;
    Recorder recorder_;
    std::vector<NodeInfo> nodes_;
    QueryResult* result_ = nullptr;
    KnowledgeBase* kb_ = nullptr;
};

/// Probability of evidence by recursive conditioning.
inline QueryResult rc_query(const Network& net, const Dtree& dt, const Evidence& ev, const QueryOptions& options = {}) {
    RecursiveConditioner rc(net, dt, options.policy);
    return rc.run(ev, options.kb, options.log_domain);
}

/// Sums the joint over every complete instantiation consistent with `ev`.
inline double brute_force_probability(const Network& net, const Evidence& ev, Cells max_states = 10'000'000) {
    validate_evidence(net, ev);
    const std::size_t n = net.size();
    std::vector<VarId> free;
    std::vector<StateIndex> inst(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        auto it = ev.assignments.find(static_cast<VarId>(v));
        if (it == ev.assignments.end()) {
            free.push_back(static_cast<VarId>(v));
        } else {
            inst[v] = it->second;
        }
    }
    Cells space = 1;
    for (std::size_t v = 0; v < n; ++v) space = saturating_mul(space, net.cardinality(static_cast<VarId>(v)));
    if (space > max_states) throw ModelError("state space too large for enumeration");

    double total = 0.0;
    for (;;) {
        double joint = 1.0;
        for (std::size_t v = 0; v < n && joint != 0.0; ++v) {
            joint *= cpt_prob_assigned(net, static_cast<VarId>(v), inst);
        }
        total += joint;
        std::size_t i = free.size();
        while (i-- > 0) {
            const auto v = static_cast<std::size_t>(free[i]);
            if (static_cast<std::size_t>(++inst[v]) < net.cardinality(free[i])) break;
            inst[v] = 0;
        }
        if (i == static_cast<std::size_t>(-1)) break;
    }
    return total;
}

}  // namespace rcond

#endif  // RCOND_ENGINE_HPP_
