#ifndef RCOND_KB_HPP_
#define RCOND_KB_HPP_

#include <compare>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rcond/model.hpp"

namespace rcond {

class KbError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (X = x) when positive, (X != x) otherwise.
struct Literal {
    VarId var = 0;
    StateIndex state = 0;
    bool positive = true;

    auto operator<=>(const Literal&) const = default;
};

inline Literal is(VarId v, StateIndex s) { return {v, s, true}; }
inline Literal is_not(VarId v, StateIndex s) { return {v, s, false}; }

/// Disjunction of literals.
struct Clause {
    std::vector<Literal> literals;

    bool operator==(const Clause&) const = default;
};

enum class Propagation { ok, contradiction };

/// Multi-valued clause database with unit resolution.
///
/// Each variable keeps the set of states still possible and, once known, a
/// fixed value. A positive literal X=x is falsified when x has been removed
/// from X's domain; a negative literal X!=x is falsified when X is fixed to x.
/// Every clause carries a counter of falsified literals; when it reaches
/// size-1 the remaining literal is asserted. All changes go on a trail so a
/// checkpoint can be restored exactly.
class KnowledgeBase {
public:
    struct Options {
        /// Fix a variable once negative literals leave a single possible state.
        bool collapse_domains = true;
    };

    /// Opaque LIFO checkpoint handle.
    struct Checkpoint {
        std::size_t depth = 0;
        std::uint64_t serial = 0;
    };

    /// Observable state; equal snapshots mean equal KBs.
    struct Snapshot {
        std::vector<char> possible;
        std::vector<StateIndex> fixed;
        std::vector<std::uint32_t> falsified;

        bool operator==(const Snapshot&) const = default;
    };

    KnowledgeBase() : KnowledgeBase({}, {}) {}

    KnowledgeBase(std::vector<std::size_t> cardinalities, std::vector<Clause> clauses)
        : KnowledgeBase(std::move(cardinalities), std::move(clauses), Options{}) {}

    KnowledgeBase(std::vector<std::size_t> cardinalities, std::vector<Clause> clauses, Options options)
        : options_(options), cards_(std::move(cardinalities)) {
        offsets_.resize(cards_.size() + 1, 0);
        for (std::size_t v = 0; v < cards_.size(); ++v) offsets_[v + 1] = offsets_[v] + cards_[v];
        possible_.assign(offsets_.back(), 1);
        domain_size_.assign(cards_.begin(), cards_.end());
        fixed_.assign(cards_.size(), kUnassigned);
        for (std::size_t v = 0; v < cards_.size(); ++v) {
            if (cards_[v] == 1 && options_.collapse_domains) fixed_[v] = 0;
        }
        pos_occ_.resize(offsets_.back());
        neg_occ_.resize(offsets_.back());

        for (auto& c : clauses) {
            std::vector<Literal> kept;
            for (const auto& l : c.literals) {
                check_literal(l);
                if (std::find(kept.begin(), kept.end(), l) == kept.end()) kept.push_back(l);
            }
            c.literals = std::move(kept);
        }
        clauses_ = std::move(clauses);
        falsified_.assign(clauses_.size(), 0);
        for (std::size_t ci = 0; ci < clauses_.size(); ++ci) {
            for (const auto& l : clauses_[ci].literals) {
                (l.positive ? pos_occ_ : neg_occ_)[slot(l.var, l.state)].push_back(static_cast<std::uint32_t>(ci));
            }
        }
        falsified_ = recount();

        // Unit clauses and clauses already reduced to a unit by
        // single-state variables.
        for (std::size_t ci = 0; ci < clauses_.size() && !base_contradiction_; ++ci) {
            const auto& lits = clauses_[ci].literals;
            if (falsified_[ci] == lits.size()) {
                base_contradiction_ = true;
            } else if (falsified_[ci] + 1 == lits.size()) {
                for (const auto& l : lits) {
                    if (!falsified(l) && !satisfied(l)) {
                        base_contradiction_ = assert_literal(l) == Propagation::contradiction;
                        break;
                    }
                }
            }
        }
        base_trail_ = trail_.size();
    }

    [[nodiscard]] std::size_t variable_count() const { return cards_.size(); }
    [[nodiscard]] const std::vector<Clause>& clauses() const { return clauses_; }
    [[nodiscard]] std::size_t clause_count() const { return clauses_.size(); }
    [[nodiscard]] std::size_t literal_count() const {
        std::size_t n = 0;
        for (const auto& c : clauses_) n += c.literals.size();
        return n;
    }

    /// True when the clauses alone (plus unit propagation) are contradictory.
    [[nodiscard]] bool base_contradiction() const { return base_contradiction_; }

    [[nodiscard]] bool possible(VarId v, StateIndex s) const { return possible_[slot(v, s)] != 0; }
    [[nodiscard]] std::size_t domain_size(VarId v) const { return domain_size_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] StateIndex fixed(VarId v) const { return fixed_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] const std::vector<std::uint32_t>& falsified_counts() const { return falsified_; }

    [[nodiscard]] bool falsified(const Literal& l) const {
        return l.positive ? !possible(l.var, l.state) : fixed(l.var) == l.state;
    }
    [[nodiscard]] bool satisfied(const Literal& l) const {
        return l.positive ? fixed(l.var) == l.state : !possible(l.var, l.state);
    }

    /// Asserts a literal and runs unit resolution to a fixpoint. On
    /// contradiction the KB is left mid-propagation and must be restored with
    /// retract_to.
    Propagation assert_literal(const Literal& lit) {
        check_literal(lit);
        conflict_ = false;
        queue_.clear();
        queue_.push_back(lit);
        for (std::size_t head = 0; head < queue_.size() && !conflict_; ++head) {
            const Literal next = queue_[head];  // apply() may grow queue_
            apply(next);
        }
        return conflict_ ? Propagation::contradiction : Propagation::ok;
    }

    Checkpoint checkpoint() {
        checkpoints_.push_back({trail_.size(), ++serial_});
        return {checkpoints_.size() - 1, serial_};
    }

    /// Undoes everything since `cp` was taken, including cascaded implications,
    /// and discards `cp` and any later checkpoints.
    void retract_to(Checkpoint cp) {
        if (cp.depth >= checkpoints_.size() || checkpoints_[cp.depth].serial != cp.serial) {
            throw KbError("retract_to: stale or out-of-order checkpoint");
        }
        undo_until(checkpoints_[cp.depth].trail_pos);
        checkpoints_.resize(cp.depth);
    }

    [[nodiscard]] std::size_t open_checkpoints() const { return checkpoints_.size(); }

    [[nodiscard]] Snapshot snapshot() const { return {possible_, fixed_, falsified_}; }

    /// Falsified-literal counts computed from scratch from domains and fixed values.
    [[nodiscard]] std::vector<std::uint32_t> recount() const {
        std::vector<std::uint32_t> out(clauses_.size(), 0);
        for (std::size_t ci = 0; ci < clauses_.size(); ++ci) {
            for (const auto& l : clauses_[ci].literals) out[ci] += falsified(l) ? 1 : 0;
        }
        return out;
    }

private:
    enum class Op : std::uint8_t { remove, fix };

    struct TrailEntry {
        Op op;
        VarId var;
        StateIndex state;
    };

    struct Mark {
        std::size_t trail_pos;
        std::uint64_t serial;
    };

    [[nodiscard]] std::size_t slot(VarId v, StateIndex s) const {
        return offsets_[static_cast<std::size_t>(v)] + static_cast<std::size_t>(s);
    }

    void check_literal(const Literal& l) const {
        if (l.var < 0 || static_cast<std::size_t>(l.var) >= cards_.size() || l.state < 0 ||
            static_cast<std::size_t>(l.state) >= cards_[static_cast<std::size_t>(l.var)]) {
            throw KbError("literal out of range");
        }
    }

    void apply(const Literal& lit) {
        const auto v = static_cast<std::size_t>(lit.var);
        if (lit.positive) {
            if (!possible(lit.var, lit.state)) {
                conflict_ = true;
                return;
            }
            for (StateIndex s = 0; static_cast<std::size_t>(s) < cards_[v] && !conflict_; ++s) {
                if (s != lit.state && possible(lit.var, s)) remove(lit.var, s);
            }
            if (!conflict_ && fixed_[v] != lit.state) fix(lit.var, lit.state);
            return;
        }
        if (!possible(lit.var, lit.state)) return;
        if (domain_size_[v] == 1) {
            conflict_ = true;
            return;
        }
        remove(lit.var, lit.state);
        if (!conflict_ && options_.collapse_domains && domain_size_[v] == 1 && fixed_[v] == kUnassigned) {
            for (StateIndex s = 0; static_cast<std::size_t>(s) < cards_[v]; ++s) {
                if (possible(lit.var, s)) {
                    fix(lit.var, s);
                    break;
                }
            }
        }
    }

    void remove(VarId v, StateIndex s) {
        possible_[slot(v, s)] = 0;
        --domain_size_[static_cast<std::size_t>(v)];
        trail_.push_back({Op::remove, v, s});
        for (auto ci : pos_occ_[slot(v, s)]) bump(ci);
    }

    void fix(VarId v, StateIndex s) {
        fixed_[static_cast<std::size_t>(v)] = s;
        trail_.push_back({Op::fix, v, s});
        for (auto ci : neg_occ_[slot(v, s)]) bump(ci);
    }

    void bump(std::uint32_t ci) {
        const auto& lits = clauses_[ci].literals;
        const std::uint32_t count = ++falsified_[ci];
        if (count == lits.size()) {
            conflict_ = true;
        } else if (count + 1 == lits.size()) {
            for (const auto& l : lits) {
                if (!falsified(l)) {
                    if (!satisfied(l)) queue_.push_back(l);
                    break;
                }
            }
        }
    }

    void undo_until(std::size_t pos) {
        if (pos < base_trail_) throw KbError("retract_to: cannot undo below the base state");
        while (trail_.size() > pos) {
            const TrailEntry e = trail_.back();
            trail_.pop_back();
            if (e.op == Op::remove) {
                possible_[slot(e.var, e.state)] = 1;
                ++domain_size_[static_cast<std::size_t>(e.var)];
                for (auto ci : pos_occ_[slot(e.var, e.state)]) --falsified_[ci];
            } else {
                fixed_[static_cast<std::size_t>(e.var)] = kUnassigned;
                for (auto ci : neg_occ_[slot(e.var, e.state)]) --falsified_[ci];
            }
        }
    }

    Options options_;
    std::vector<std::size_t> cards_;
    std::vector<std::size_t> offsets_;
    std::vector<char> possible_;
    std::vector<std::size_t> domain_size_;
    std::vector<StateIndex> fixed_;
    std::vector<Clause> clauses_;
    std::vector<std::uint32_t> falsified_;
    std::vector<std::vector<std::uint32_t>> pos_occ_;
    std::vector<std::vector<std::uint32_t>> neg_occ_;

    std::vector<TrailEntry> trail_;
    std::vector<Mark> checkpoints_;
    std::vector<Literal> queue_;
    std::size_t base_trail_ = 0;
    std::uint64_t serial_ = 0;
    bool conflict_ = false;
    bool base_contradiction_ = false;
};

/// Clauses encoding the 0/1 entries of every tabular CPT. For each parent
/// row u: if some state c has Pr(c|u) == 1, one clause (C=c ∨ P1≠u1 ∨ ...);
/// otherwise one clause (C≠c ∨ P1≠u1 ∨ ...) per state with Pr(c|u) == 0.
/// Exact comparisons; duplicate clauses are dropped.
inline std::vector<Clause> compile_clauses(const Network& net) {
    std::vector<Clause> out;
    std::set<std::vector<Literal>> seen;
    const auto& cards = net.cardinalities();
    for (const auto& cpt : net.cpts()) {
        const auto* table = std::get_if<TabularCpt>(&cpt);
        if (table == nullptr) continue;
        const VarId child = table->child;
        const std::size_t k = cards[static_cast<std::size_t>(child)];
        std::vector<StateIndex> inst(table->parents.size(), 0);
        const std::size_t rows = table->entries.size() / k;
        for (std::size_t r = 0; r < rows; ++r) {
            auto emit = [&](Literal head) {
                Clause c;
                c.literals.push_back(head);
                for (std::size_t i = 0; i < inst.size(); ++i) c.literals.push_back(is_not(table->parents[i], inst[i]));
                auto key = c.literals;
                std::sort(key.begin(), key.end());
                if (seen.insert(std::move(key)).second) out.push_back(std::move(c));
            };
            const double* row = table->entries.data() + r * k;
            std::size_t one = k;
            for (std::size_t s = 0; s < k; ++s) {
                if (row[s] == 1.0) {
                    one = s;
                    break;
                }
            }
            if (one < k) {
                emit(is(child, static_cast<StateIndex>(one)));
            } else {
                for (std::size_t s = 0; s < k; ++s) {
                    if (row[s] == 0.0) emit(is_not(child, static_cast<StateIndex>(s)));
                }
            }
            for (std::size_t i = inst.size(); i-- > 0;) {
                if (static_cast<std::size_t>(++inst[i]) < cards[static_cast<std::size_t>(table->parents[i])]) break;
                inst[i] = 0;
            }
        }
    }
    return out;
}

inline KnowledgeBase compile_kb(const Network& net, KnowledgeBase::Options options = {}) {
    return KnowledgeBase(net.cardinalities(), compile_clauses(net), options);
}

inline std::string format_literal(const Network& net, const Literal& l) {
    const auto& v = net.variable(l.var);
    return v.name + (l.positive ? "=" : "!=") + v.states[static_cast<std::size_t>(l.state)];
}

/// One clause per line, literals as `v=s` / `v!=s`, preceded by a header line.
inline std::string dump_clauses(const Network& net, const std::vector<Clause>& clauses) {
    std::size_t literals = 0;
    for (const auto& c : clauses) literals += c.literals.size();
    std::ostringstream os;
    os << "p mvcnf " << net.size() << ' ' << clauses.size() << ' ' << literals << '\n';
    for (const auto& c : clauses) {
        for (std::size_t i = 0; i < c.literals.size(); ++i) {
            if (i) os << ' ';
            os << format_literal(net, c.literals[i]);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace rcond

#endif  // RCOND_KB_HPP_
