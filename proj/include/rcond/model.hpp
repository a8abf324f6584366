#ifndef RCOND_MODEL_HPP_
#define RCOND_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace rcond {

using VarId = std::int32_t;
using StateIndex = std::int32_t;

/// Number of table cells / instantiations. Saturates instead of wrapping.
using Cells = std::uint64_t;

inline constexpr StateIndex kUnassigned = -1;
inline constexpr double kRowSumTolerance = 1e-9;

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Cells saturating_mul(Cells a, Cells b) {
    if (a != 0 && b > std::numeric_limits<Cells>::max() / a) {
        return std::numeric_limits<Cells>::max();
    }
    return a * b;
}

inline Cells saturating_add(Cells a, Cells b) {
    Cells s = a + b;
    return s < a ? std::numeric_limits<Cells>::max() : s;
}

struct Variable {
    VarId id = 0;
    std::string name;
    std::vector<std::string> states;

    [[nodiscard]] std::size_t cardinality() const { return states.size(); }

    [[nodiscard]] std::optional<StateIndex> state_index(std::string_view label) const {
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (states[i] == label) return static_cast<StateIndex>(i);
        }
        return std::nullopt;
    }

    bool operator==(const Variable&) const = default;
};

/// Row-major table Pr(child | parents). Parent instantiations enumerate in
/// mixed-radix order with the last parent fastest; child states are the
/// innermost, contiguous run of each row.
struct TabularCpt {
    VarId child = 0;
    std::vector<VarId> parents;
    std::vector<double> entries;

    bool operator==(const TabularCpt&) const = default;
};

/// Binary child with states [false, true].
/// Pr(false | u) = (1 - leak) * prod_{i : u_i == trigger_i} inhibitor_i.
struct NoisyOrCpt {
    VarId child = 0;
    std::vector<VarId> parents;
    std::vector<StateIndex> trigger;
    std::vector<double> inhibitor;
    double leak = 0.0;

    bool operator==(const NoisyOrCpt&) const = default;
};

using Cpt = std::variant<TabularCpt, NoisyOrCpt>;

inline VarId cpt_child(const Cpt& cpt) {
    return std::visit([](const auto& c) { return c.child; }, cpt);
}

inline const std::vector<VarId>& cpt_parents(const Cpt& cpt) {
    return std::visit([](const auto& c) -> const std::vector<VarId>& { return c.parents; }, cpt);
}

/// Stored parameters of a CPT: the table length, or 2 + 2 per parent for noisy-or.
inline std::size_t cpt_storage_cells(const Cpt& cpt) {
    if (const auto* t = std::get_if<TabularCpt>(&cpt)) return t->entries.size();
    const auto& n = std::get<NoisyOrCpt>(cpt);
    return 1 + n.trigger.size() + n.inhibitor.size();
}

/// Evidence is a partial assignment keyed by variable id.
struct Evidence {
    std::map<VarId, StateIndex> assignments;

    bool operator==(const Evidence&) const = default;
};

/// A validated Bayesian network. Immutable once constructed.
class Network {
public:
    Network() = default;

    /// Validates and takes ownership. `cpts` may be given in any order; each
    /// variable must be the child of exactly one entry.
    Network(std::vector<Variable> variables, std::vector<Cpt> cpts);

    [[nodiscard]] std::size_t size() const { return variables_.size(); }
    [[nodiscard]] const std::vector<Variable>& variables() const { return variables_; }
    [[nodiscard]] const Variable& variable(VarId v) const { return variables_.at(static_cast<std::size_t>(v)); }
    [[nodiscard]] std::size_t cardinality(VarId v) const { return cardinalities_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] const std::vector<std::size_t>& cardinalities() const { return cardinalities_; }

    /// CPT whose child is `v`.
    [[nodiscard]] const Cpt& cpt(VarId v) const { return cpts_.at(static_cast<std::size_t>(v)); }
    [[nodiscard]] const std::vector<Cpt>& cpts() const { return cpts_; }
    [[nodiscard]] const std::vector<VarId>& parents(VarId v) const { return cpt_parents(cpt(v)); }

    /// {v} ∪ parents(v), sorted by id.
    [[nodiscard]] const std::vector<VarId>& family(VarId v) const { return families_[static_cast<std::size_t>(v)]; }

    [[nodiscard]] std::optional<VarId> find(std::string_view name) const {
        auto it = by_name_.find(std::string(name));
        if (it == by_name_.end()) return std::nullopt;
        return it->second;
    }

    /// ‖S‖ for a set of variables, saturating.
    [[nodiscard]] Cells instantiations(std::span<const VarId> vars) const {
        Cells n = 1;
        for (VarId v : vars) n = saturating_mul(n, cardinality(v));
        return n;
    }

    bool operator==(const Network& o) const { return variables_ == o.variables_ && cpts_ == o.cpts_; }

private:
    void validate() const;

    std::vector<Variable> variables_;
    std::vector<Cpt> cpts_;
    std::vector<std::size_t> cardinalities_;
    std::vector<std::vector<VarId>> families_;
    std::unordered_map<std::string, VarId> by_name_;
};

namespace detail {

inline std::size_t table_rows(const Network& net, const std::vector<VarId>& parents) {
    std::size_t rows = 1;
    for (VarId p : parents) rows *= net.cardinality(p);
    return rows;
}

inline void check_noisy_or_params(const NoisyOrCpt& c, const std::string& child_name) {
    if (c.trigger.size() != c.parents.size() || c.inhibitor.size() != c.parents.size()) {
        throw ModelError("noisy-or CPT for '" + child_name + "': trigger/inhibitor length does not match parents");
    }
    for (double q : c.inhibitor) {
        if (!(q >= 0.0 && q <= 1.0)) throw ModelError("noisy-or CPT for '" + child_name + "': inhibitor outside [0,1]");
    }
    if (!(c.leak >= 0.0 && c.leak <= 1.0)) throw ModelError("noisy-or CPT for '" + child_name + "': leak outside [0,1]");
}

}  // namespace detail

inline Network::Network(std::vector<Variable> variables, std::vector<Cpt> cpts)
    : variables_(std::move(variables)) {
    const std::size_t n = variables_.size();
    cardinalities_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Variable& var = variables_[i];
        if (var.id != static_cast<VarId>(i)) throw ModelError("variable ids must be dense and in order");
        if (var.states.empty()) throw ModelError("variable '" + var.name + "' has no states");
        for (std::size_t a = 0; a < var.states.size(); ++a) {
            for (std::size_t b = a + 1; b < var.states.size(); ++b) {
                if (var.states[a] == var.states[b]) {
                    throw ModelError("variable '" + var.name + "' repeats state '" + var.states[a] + "'");
                }
            }
        }
        if (!by_name_.emplace(var.name, var.id).second) throw ModelError("duplicate variable name '" + var.name + "'");
        cardinalities_[i] = var.states.size();
    }

    std::vector<std::optional<Cpt>> slots(n);
    for (auto& c : cpts) {
        VarId child = cpt_child(c);
        if (child < 0 || static_cast<std::size_t>(child) >= n) throw ModelError("CPT child id out of range");
        if (slots[static_cast<std::size_t>(child)]) {
            throw ModelError("more than one CPT for '" + variables_[static_cast<std::size_t>(child)].name + "'");
        }
        slots[static_cast<std::size_t>(child)] = std::move(c);
    }
    cpts_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots[i]) throw ModelError("missing CPT for '" + variables_[i].name + "'");
        cpts_.push_back(std::move(*slots[i]));
    }

    families_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto fam = cpt_parents(cpts_[i]);
        fam.push_back(static_cast<VarId>(i));
        std::sort(fam.begin(), fam.end());
        families_[i] = std::move(fam);
    }
    validate();
}

inline void Network::validate() const {
    const std::size_t n = variables_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& name = variables_[i].name;
        const auto& parents = cpt_parents(cpts_[i]);
        for (std::size_t a = 0; a < parents.size(); ++a) {
            VarId p = parents[a];
            if (p < 0 || static_cast<std::size_t>(p) >= n) throw ModelError("CPT for '" + name + "' has unknown parent");
            if (static_cast<std::size_t>(p) == i) throw ModelError("cycle detected: '" + name + "' is its own parent");
            for (std::size_t b = a + 1; b < parents.size(); ++b) {
                if (parents[b] == p) throw ModelError("CPT for '" + name + "' repeats a parent");
            }
        }

        if (const auto* t = std::get_if<TabularCpt>(&cpts_[i])) {
            const std::size_t k = cardinalities_[i];
            const std::size_t rows = detail::table_rows(*this, t->parents);
            if (t->entries.size() != rows * k) {
                throw ModelError("CPT for '" + name + "' has " + std::to_string(t->entries.size()) +
                                 " entries, expected " + std::to_string(rows * k));
            }
            for (std::size_t r = 0; r < rows; ++r) {
                double sum = 0.0;
                for (std::size_t s = 0; s < k; ++s) {
                    double p = t->entries[r * k + s];
                    if (!(p >= 0.0 && p <= 1.0)) throw ModelError("CPT for '" + name + "' has an entry outside [0,1]");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > kRowSumTolerance) {
                    throw ModelError("CPT for '" + name + "' row " + std::to_string(r) + " sums to " + std::to_string(sum));
                }
            }
        } else {
            const auto& no = std::get<NoisyOrCpt>(cpts_[i]);
            if (cardinalities_[i] != 2) throw ModelError("noisy-or child '" + name + "' is not binary");
            detail::check_noisy_or_params(no, name);
            for (std::size_t a = 0; a < no.parents.size(); ++a) {
                StateIndex s = no.trigger[a];
                if (s < 0 || static_cast<std::size_t>(s) >= cardinalities_[static_cast<std::size_t>(no.parents[a])]) {
                    throw ModelError("noisy-or CPT for '" + name + "' has a trigger state out of range");
                }
            }
        }
    }

    // Kahn's algorithm over the parent graph.
    std::vector<std::size_t> pending(n);
    std::vector<std::vector<VarId>> children(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& parents = cpt_parents(cpts_[i]);
        pending[i] = parents.size();
        for (VarId p : parents) children[static_cast<std::size_t>(p)].push_back(static_cast<VarId>(i));
    }
    std::vector<VarId> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (pending[i] == 0) ready.push_back(static_cast<VarId>(i));
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        VarId v = ready.back();
        ready.pop_back();
        ++seen;
        for (VarId c : children[static_cast<std::size_t>(v)]) {
            if (--pending[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
        }
    }
    if (seen != n) throw ModelError("cycle detected in parent graph");
}

/// Pr(child_state | parent states) where `parent_states[i]` is the state of
/// the i-th parent in CPT order.
inline double cpt_prob(const Cpt& cpt, const std::vector<std::size_t>& cards, StateIndex child_state,
                       std::span<const StateIndex> parent_states) {
    if (const auto* t = std::get_if<TabularCpt>(&cpt)) {
        std::size_t row = 0;
        for (std::size_t i = 0; i < t->parents.size(); ++i) {
            row = row * cards[static_cast<std::size_t>(t->parents[i])] + static_cast<std::size_t>(parent_states[i]);
        }
        return t->entries[row * cards[static_cast<std::size_t>(t->child)] + static_cast<std::size_t>(child_state)];
    }
    const auto& n = std::get<NoisyOrCpt>(cpt);
    double p_false = 1.0 - n.leak;
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
        if (parent_states[i] == n.trigger[i]) p_false *= n.inhibitor[i];
    }
    return child_state == 0 ? p_false : 1.0 - p_false;
}

/// Pr(x | u) read from a full per-variable assignment (kUnassigned for
/// unassigned). Hot path for LOOKUP; all parents must be assigned.
inline double cpt_prob_assigned(const Network& net, VarId child, std::span<const StateIndex> assignment) {
    const Cpt& cpt = net.cpt(child);
    const auto& cards = net.cardinalities();
    const StateIndex x = assignment[static_cast<std::size_t>(child)];
    if (const auto* t = std::get_if<TabularCpt>(&cpt)) {
        std::size_t row = 0;
        for (VarId p : t->parents) {
            row = row * cards[static_cast<std::size_t>(p)] + static_cast<std::size_t>(assignment[static_cast<std::size_t>(p)]);
        }
        return t->entries[row * cards[static_cast<std::size_t>(child)] + static_cast<std::size_t>(x)];
    }
    const auto& n = std::get<NoisyOrCpt>(cpt);
    // Four independent partial products keep the multiply chain short.
    double acc[4] = {1.0 - n.leak, 1.0, 1.0, 1.0};
    const std::size_t k = n.parents.size();
    std::size_t i = 0;
    for (; i + 4 <= k; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            const bool on = assignment[static_cast<std::size_t>(n.parents[i + j])] == n.trigger[i + j];
            acc[j] *= on ? n.inhibitor[i + j] : 1.0;
        }
    }
    for (; i < k; ++i) {
        if (assignment[static_cast<std::size_t>(n.parents[i])] == n.trigger[i]) acc[0] *= n.inhibitor[i];
    }
    const double p_false = (acc[0] * acc[1]) * (acc[2] * acc[3]);
    return x == 0 ? p_false : 1.0 - p_false;
}

/// Checked form: `parent_inst` maps parent id to state and must cover every parent.
inline double cpt_prob(const Network& net, VarId child, StateIndex child_state,
                       const std::map<VarId, StateIndex>& parent_inst) {
    const auto& parents = net.parents(child);
    std::vector<StateIndex> states;
    states.reserve(parents.size());
    for (VarId p : parents) {
        auto it = parent_inst.find(p);
        if (it == parent_inst.end()) {
            throw ModelError("missing assignment for parent '" + net.variable(p).name + "' of '" +
                             net.variable(child).name + "'");
        }
        if (it->second < 0 || static_cast<std::size_t>(it->second) >= net.cardinality(p)) {
            throw ModelError("state out of range for '" + net.variable(p).name + "'");
        }
        states.push_back(it->second);
    }
    if (child_state < 0 || static_cast<std::size_t>(child_state) >= net.cardinality(child)) {
        throw ModelError("state out of range for '" + net.variable(child).name + "'");
    }
    return cpt_prob(net.cpt(child), net.cardinalities(), child_state, states);
}

/// Expands a noisy-or CPT into the equivalent table. `parent_cards[i]` is the
/// cardinality of the i-th parent; throws when the table would exceed `max_cells`.
inline TabularCpt expand_to_table(const NoisyOrCpt& cpt, std::span<const std::size_t> parent_cards,
                                  Cells max_cells) {
    if (parent_cards.size() != cpt.parents.size()) throw ModelError("expand_to_table: parent cardinality count mismatch");
    detail::check_noisy_or_params(cpt, "expand_to_table");
    Cells rows = 1;
    for (std::size_t c : parent_cards) rows = saturating_mul(rows, c);
    const Cells cells = saturating_mul(rows, 2);
    if (cells > max_cells) {
        throw ModelError("expanded noisy-or table needs " + std::to_string(cells) + " cells, budget is " +
                         std::to_string(max_cells));
    }
    TabularCpt table{cpt.child, cpt.parents, {}};
    table.entries.reserve(static_cast<std::size_t>(cells));
    std::vector<StateIndex> inst(parent_cards.size(), 0);
    for (Cells r = 0; r < rows; ++r) {
        double p_false = 1.0 - cpt.leak;
        for (std::size_t i = 0; i < inst.size(); ++i) {
            if (inst[i] == cpt.trigger[i]) p_false *= cpt.inhibitor[i];
        }
        table.entries.push_back(p_false);
        table.entries.push_back(1.0 - p_false);
        for (std::size_t i = inst.size(); i-- > 0;) {
            if (static_cast<std::size_t>(++inst[i]) < parent_cards[i]) break;
            inst[i] = 0;
        }
    }
    return table;
}

inline TabularCpt expand_to_table(const Network& net, const NoisyOrCpt& cpt, Cells max_cells) {
    std::vector<std::size_t> cards;
    for (VarId p : cpt.parents) cards.push_back(net.cardinality(p));
    return expand_to_table(cpt, cards, max_cells);
}

/// Throws unless every evidence entry names a known variable and an in-range state.
inline void validate_evidence(const Network& net, const Evidence& ev) {
    for (auto [v, s] : ev.assignments) {
        if (v < 0 || static_cast<std::size_t>(v) >= net.size()) throw ModelError("evidence on unknown variable");
        if (s < 0 || static_cast<std::size_t>(s) >= net.cardinality(v)) {
            throw ModelError("evidence state out of range for '" + net.variable(v).name + "'");
        }
    }
}

}  // namespace rcond

#endif  // RCOND_MODEL_HPP_
