#ifndef RCOND_DTREE_HPP_
#define RCOND_DTREE_HPP_

#include <cctype>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "rcond/model.hpp"
#include "rcond/varset.hpp"

namespace rcond {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

class DtreeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// `exempt` marks the root and the leaves, which never cache.
enum class CacheState { exempt, live, dead, disabled };

inline const char* to_string(CacheState s) {
    switch (s) {
        case CacheState::exempt: return "exempt";
        case CacheState::live: return "live";
        case CacheState::dead: return "dead";
        case CacheState::disabled: return "disabled";
    }
    return "?";
}

struct DtreeNode {
    NodeId id = kNoNode;
    NodeId parent = kNoNode;
    NodeId left = kNoNode;
    NodeId right = kNoNode;
    VarId leaf_var = -1;  ///< variable whose CPT the leaf carries

    VarSet vars;
    VarSet acutset;
    VarSet cutset;
    VarSet context;
    VarSet cluster;
    CacheState cache_state = CacheState::exempt;

    [[nodiscard]] bool is_leaf() const { return left == kNoNode; }
};

struct DtreeStats {
    std::size_t width = 0;          ///< max cluster size - 1
    std::size_t context_width = 0;  ///< max context size
    Cells cache_cells_all = 0;      ///< sum of ‖context‖ over cacheable (internal, non-root) nodes
    Cells cache_cells_live = 0;     ///< same, restricted to live caches
    std::size_t dead_caches = 0;
    std::size_t internal_nodes = 0;
    std::size_t leaves = 0;
};

/// A full binary tree over a network's CPT families, stored as an arena.
/// Node annotations are filled in by `annotate`.
class Dtree {
public:
    NodeId add_leaf(VarId v) {
        DtreeNode n;
        n.id = static_cast<NodeId>(nodes_.size());
        n.leaf_var = v;
        nodes_.push_back(std::move(n));
        root_ = nodes_.back().id;
        return root_;
    }

    NodeId add_internal(NodeId left, NodeId right) {
        if (left == right || !valid(left) || !valid(right)) throw DtreeError("add_internal: bad children");
        if (nodes_[static_cast<std::size_t>(left)].parent != kNoNode ||
            nodes_[static_cast<std::size_t>(right)].parent != kNoNode) {
            throw DtreeError("add_internal: child already has a parent");
        }
        DtreeNode n;
        n.id = static_cast<NodeId>(nodes_.size());
        n.left = left;
        n.right = right;
        nodes_[static_cast<std::size_t>(left)].parent = n.id;
        nodes_[static_cast<std::size_t>(right)].parent = n.id;
        nodes_.push_back(std::move(n));
        root_ = nodes_.back().id;
        return root_;
    }

    void set_root(NodeId r) { root_ = r; }

    [[nodiscard]] NodeId root() const { return root_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] const DtreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    [[nodiscard]] DtreeNode& node(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }
    [[nodiscard]] const std::vector<DtreeNode>& nodes() const { return nodes_; }
    [[nodiscard]] bool annotated() const { return annotated_; }

    /// Children before parents, reachable from the root only.
    [[nodiscard]] std::vector<NodeId> postorder() const {
        std::vector<NodeId> out;
        if (root_ == kNoNode) return out;
        std::vector<std::pair<NodeId, bool>> stack{{root_, false}};
        while (!stack.empty()) {
            auto [id, expanded] = stack.back();
            stack.pop_back();
            const auto& n = node(id);
            if (expanded || n.is_leaf()) {
                out.push_back(id);
            } else {
                stack.push_back({id, true});
                stack.push_back({n.right, false});
                stack.push_back({n.left, false});
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t depth() const {
        std::size_t best = 0;
        for (const auto& n : nodes_) {
            std::size_t d = 0;
            for (NodeId p = n.parent; p != kNoNode; p = node(p).parent) ++d;
            best = std::max(best, d);
        }
        return best;
    }

private:
    friend DtreeStats annotate(Dtree& dtree, const Network& net);

    [[nodiscard]] bool valid(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }

    std::vector<DtreeNode> nodes_;
    NodeId root_ = kNoNode;
    bool annotated_ = false;
};

/// Undirected moral graph as an adjacency matrix.
inline std::vector<std::vector<char>> moral_graph(const Network& net) {
    const std::size_t n = net.size();
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (std::size_t v = 0; v < n; ++v) {
        const auto& fam = net.family(static_cast<VarId>(v));
        for (VarId a : fam) {
            for (VarId b : fam) {
                if (a != b) adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
            }
        }
    }
    return adj;
}

/// Greedy min-fill elimination order of an undirected graph. Ties go to the
/// smaller current neighborhood, then to the smaller vertex index.
inline std::vector<VarId> min_fill_order(std::vector<std::vector<char>> adj) {
    const std::size_t n = adj.size();
    std::vector<char> gone(n, 0);
    std::vector<VarId> order;
    order.reserve(n);
    std::vector<std::size_t> nbrs;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t best = n;
        std::size_t best_fill = 0;
        std::size_t best_deg = 0;
        for (std::size_t v = 0; v < n; ++v) {
            if (gone[v]) continue;
            nbrs.clear();
            for (std::size_t u = 0; u < n; ++u) {
                if (!gone[u] && adj[v][u]) nbrs.push_back(u);
            }
            std::size_t fill = 0;
            for (std::size_t i = 0; i < nbrs.size(); ++i) {
                for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
                    if (!adj[nbrs[i]][nbrs[j]]) ++fill;
                }
            }
            if (best == n || fill < best_fill || (fill == best_fill && nbrs.size() < best_deg)) {
                best = v;
                best_fill = fill;
                best_deg = nbrs.size();
            }
        }
        nbrs.clear();
        for (std::size_t u = 0; u < n; ++u) {
            if (!gone[best] && !gone[u] && adj[best][u]) nbrs.push_back(u);
        }
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
                adj[nbrs[i]][nbrs[j]] = adj[nbrs[j]][nbrs[i]] = 1;
            }
        }
        gone[best] = 1;
        order.push_back(static_cast<VarId>(best));
    }
    return order;
}

/// Min-fill order on the network's moral graph.
inline std::vector<VarId> min_fill_order(const Network& net) { return min_fill_order(moral_graph(net)); }

inline void check_permutation(const std::vector<VarId>& order, std::size_t n) {
    if (order.size() != n) throw DtreeError("elimination order is not a permutation of the variables");
    std::vector<char> seen(n, 0);
    for (VarId v : order) {
        if (v < 0 || static_cast<std::size_t>(v) >= n || seen[static_cast<std::size_t>(v)]) {
            throw DtreeError("elimination order is not a permutation of the variables");
        }
        seen[static_cast<std::size_t>(v)] = 1;
    }
}

/// Builds a dtree from an elimination order. Starting from one leaf per
/// family, each variable in turn gathers every current tree mentioning it and
/// composes them pairwise through a FIFO queue; leftover trees (disconnected
/// components) are composed the same way at the end. The result is annotated
/// and has its dead caches marked.
inline Dtree build_dtree(const Network& net, const std::vector<VarId>& order);

/// Parses an explicit shape such as "(X1 (X2 (X3 Y)))" whose leaves are
/// variable names. The result is annotated and has its dead caches marked.
inline Dtree dtree_from_shape(const Network& net, std::string_view shape);

/// Fills vars/acutset/cutset/context/cluster for every node and resets cache
/// states (root and leaves exempt, other internal nodes live).
inline DtreeStats annotate(Dtree& dtree, const Network& net) {
    if (dtree.root_ == kNoNode) throw DtreeError("empty dtree");
    const auto post = dtree.postorder();

    std::vector<std::size_t> leaves_per_var(net.size(), 0);
    std::size_t leaves = 0;
    for (NodeId id : post) {
        const auto& n = dtree.node(id);
        if (n.is_leaf()) {
            if (n.leaf_var < 0 || static_cast<std::size_t>(n.leaf_var) >= net.size()) {
                throw DtreeError("dtree leaf refers to an unknown variable");
            }
            ++leaves_per_var[static_cast<std::size_t>(n.leaf_var)];
            ++leaves;
        } else if (n.right == kNoNode) {
            throw DtreeError("dtree node has a single child");
        }
    }
    for (std::size_t v = 0; v < net.size(); ++v) {
        if (leaves_per_var[v] != 1) {
            throw DtreeError("dtree leaves do not match network families: '" + net.variable(static_cast<VarId>(v)).name +
                             "' appears " + std::to_string(leaves_per_var[v]) + " times");
        }
    }

    for (NodeId id : post) {
        auto& n = dtree.node(id);
        n.vars = n.is_leaf() ? net.family(n.leaf_var) : set_union(dtree.node(n.left).vars, dtree.node(n.right).vars);
    }

    auto& root = dtree.node(dtree.root_);
    root.parent = kNoNode;
    root.acutset.clear();
    for (auto it = post.rbegin(); it != post.rend(); ++it) {
        auto& n = dtree.node(*it);
        n.context = set_intersection(n.vars, n.acutset);
        if (n.is_leaf()) {
            n.cutset.clear();
            n.cluster = n.vars;
            n.cache_state = CacheState::exempt;
            continue;
        }
        const auto& l = dtree.node(n.left);
        const auto& r = dtree.node(n.right);
        n.cutset = set_difference(set_intersection(l.vars, r.vars), n.acutset);
        n.cluster = set_union(n.cutset, n.context);
        n.cache_state = (*it == dtree.root_) ? CacheState::exempt : CacheState::live;
        auto child_acutset = set_union(n.acutset, n.cutset);
        dtree.node(n.left).acutset = child_acutset;
        dtree.node(n.right).acutset = std::move(child_acutset);
    }
    dtree.annotated_ = true;

    DtreeStats stats;
    stats.leaves = leaves;
    for (NodeId id : post) {
        const auto& n = dtree.node(id);
        stats.width = std::max(stats.width, n.cluster.size() == 0 ? std::size_t{0} : n.cluster.size() - 1);
        stats.context_width = std::max(stats.context_width, n.context.size());
        if (!n.is_leaf()) {
            ++stats.internal_nodes;
            if (id != dtree.root_) {
                stats.cache_cells_all = saturating_add(stats.cache_cells_all, net.instantiations(n.context));
                stats.cache_cells_live = stats.cache_cells_all;
            }
        }
    }
    return stats;
}

/// Recomputes the statistics of an annotated dtree from its current cache states.
inline DtreeStats dtree_stats(const Dtree& dtree, const Network& net) {
    if (!dtree.annotated()) throw DtreeError("dtree is not annotated");
    DtreeStats stats;
    for (NodeId id : dtree.postorder()) {
        const auto& n = dtree.node(id);
        stats.width = std::max(stats.width, n.cluster.size() == 0 ? std::size_t{0} : n.cluster.size() - 1);
        stats.context_width = std::max(stats.context_width, n.context.size());
        if (n.is_leaf()) {
            ++stats.leaves;
            continue;
        }
        ++stats.internal_nodes;
        if (id == dtree.root()) continue;
        const Cells cells = net.instantiations(n.context);
        stats.cache_cells_all = saturating_add(stats.cache_cells_all, cells);
        if (n.cache_state == CacheState::live) stats.cache_cells_live = saturating_add(stats.cache_cells_live, cells);
        if (n.cache_state == CacheState::dead) ++stats.dead_caches;
    }
    return stats;
}

/// A cache is dead when its context contains its parent's context: every
/// lookup key it could see is then unique, so its entries are never reused.
inline std::size_t mark_dead_caches(Dtree& dtree) {
    if (!dtree.annotated()) throw DtreeError("dtree is not annotated");
    std::size_t dead = 0;
    for (NodeId id : dtree.postorder()) {
        auto& n = dtree.node(id);
        if (n.is_leaf() || id == dtree.root()) continue;
        if (set_includes(n.context, dtree.node(n.parent).context)) {
            n.cache_state = CacheState::dead;
            ++dead;
        }
    }
    return dead;
}

inline Dtree build_dtree(const Network& net, const std::vector<VarId>& order) {
    const std::size_t n = net.size();
    if (n == 0) throw DtreeError("cannot build a dtree for an empty network");
    check_permutation(order, n);

    Dtree dt;
    struct Tree {
        NodeId id;
        VarSet vars;
    };
    std::vector<Tree> pool;
    for (std::size_t v = 0; v < n; ++v) {
        pool.push_back({dt.add_leaf(static_cast<VarId>(v)), net.family(static_cast<VarId>(v))});
    }

    auto compose = [&dt](std::deque<Tree> queue) {
        while (queue.size() > 1) {
            Tree a = std::move(queue.front());
            queue.pop_front();
            Tree b = std::move(queue.front());
            queue.pop_front();
            queue.push_back({dt.add_internal(a.id, b.id), set_union(a.vars, b.vars)});
        }
        return std::move(queue.front());
    };

    for (VarId v : order) {
        auto mentions = [v](const Tree& t) { return set_contains(t.vars, v); };
        if (std::count_if(pool.begin(), pool.end(), mentions) < 2) continue;
        std::deque<Tree> picked;
        std::vector<Tree> rest;
        for (auto& t : pool) {
            if (mentions(t)) {
                picked.push_back(std::move(t));
            } else {
                rest.push_back(std::move(t));
            }
        }
        pool = std::move(rest);
        pool.push_back(compose(std::move(picked)));
    }
    Tree root = compose(std::deque<Tree>(std::make_move_iterator(pool.begin()), std::make_move_iterator(pool.end())));
    dt.set_root(root.id);
    annotate(dt, net);
    mark_dead_caches(dt);
    return dt;
}

inline Dtree dtree_from_shape(const Network& net, std::string_view shape) {
    Dtree dt;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < shape.size() && std::isspace(static_cast<unsigned char>(shape[pos]))) ++pos;
    };
    auto parse = [&](auto& self) -> NodeId {
        skip_ws();
        if (pos >= shape.size()) throw DtreeError("dtree shape: unexpected end of input");
        if (shape[pos] == '(') {
            ++pos;
            NodeId l = self(self);
            NodeId r = self(self);
            skip_ws();
            if (pos >= shape.size() || shape[pos] != ')') throw DtreeError("dtree shape: expected ')'");
            ++pos;
            return dt.add_internal(l, r);
        }
        std::size_t start = pos;
        while (pos < shape.size() && !std::isspace(static_cast<unsigned char>(shape[pos])) && shape[pos] != '(' &&
               shape[pos] != ')') {
            ++pos;
        }
        if (start == pos) throw DtreeError("dtree shape: expected a variable name");
        std::string name(shape.substr(start, pos - start));
        auto v = net.find(name);
        if (!v) throw DtreeError("dtree shape: unknown variable '" + name + "'");
        return dt.add_leaf(*v);
    };
    NodeId root = parse(parse);
    skip_ws();
    if (pos != shape.size()) throw DtreeError("dtree shape: trailing input");
    dt.set_root(root);
    annotate(dt, net);
    mark_dead_caches(dt);
    return dt;
}

}  // namespace rcond

#endif  // RCOND_DTREE_HPP_
