#ifndef RCOND_SPACES_HPP_
#define RCOND_SPACES_HPP_

#include <vector>

#include "rcond/dtree.hpp"

namespace rcond {

struct JointreeEdge {
    std::size_t a = 0;  ///< cluster of the dtree parent
    std::size_t b = 0;  ///< cluster of the dtree child
    VarSet separator;
    bool child_is_leaf = false;
};

/// Binary jointree induced by a dtree: one cluster per dtree node, one edge
/// per parent/child pair with the child's context as separator.
struct Jointree {
    std::vector<VarSet> clusters;
    std::vector<JointreeEdge> edges;
};

enum class SeparatorScope {
    all_edges,
    /// only edges into internal dtree nodes; this is what RC can cache
    internal_children,
};

struct SpaceReport {
    Cells hugin_cells = 0;
    Cells shenoy_shafer_cells = 0;
    Cells ve_cells = 0;
    Cells rc_cells_all = 0;
    Cells rc_cells_live = 0;

    static constexpr Cells kBytesPerCell = sizeof(double);
};

inline Jointree induce_jointree(const Dtree& dt) {
    if (!dt.annotated()) throw DtreeError("dtree is not annotated");
    Jointree jt;
    std::vector<std::size_t> index(dt.size(), 0);
    // Preorder so that parents get smaller cluster indices.
    auto post = dt.postorder();
    for (auto it = post.rbegin(); it != post.rend(); ++it) {
        index[static_cast<std::size_t>(*it)] = jt.clusters.size();
        jt.clusters.push_back(dt.node(*it).cluster);
    }
    for (auto it = post.rbegin(); it != post.rend(); ++it) {
        const auto& n = dt.node(*it);
        if (n.parent == kNoNode || *it == dt.root()) continue;
        jt.edges.push_back({index[static_cast<std::size_t>(n.parent)], index[static_cast<std::size_t>(*it)], n.context,
                            n.is_leaf()});
    }
    return jt;
}

/// Separator tables only. `both_directions` doubles the count for a full
/// inward + outward propagation.
inline Cells shenoy_shafer_space(const Jointree& jt, const Network& net,
                                 SeparatorScope scope = SeparatorScope::all_edges, bool both_directions = false) {
    Cells total = 0;
    for (const auto& e : jt.edges) {
        if (scope == SeparatorScope::internal_children && e.child_is_leaf) continue;
        total = saturating_add(total, net.instantiations(e.separator));
    }
    return both_directions ? saturating_mul(total, 2) : total;
}

/// One table per cluster plus one per separator.
inline Cells hugin_space(const Jointree& jt, const Network& net) {
    Cells total = 0;
    for (const auto& c : jt.clusters) total = saturating_add(total, net.instantiations(c));
    for (const auto& e : jt.edges) total = saturating_add(total, net.instantiations(e.separator));
    return total;
}

/// The clusters {v} ∪ neighbors(v) produced by eliminating `order` on the moral graph.
inline std::vector<VarSet> elimination_clusters(const Network& net, const std::vector<VarId>& order) {
    const std::size_t n = net.size();
    check_permutation(order, n);
    auto adj = moral_graph(net);
    std::vector<char> gone(n, 0);
    std::vector<VarSet> clusters;
    clusters.reserve(n);
    for (VarId v : order) {
        const auto vi = static_cast<std::size_t>(v);
        VarSet cluster{v};
        for (std::size_t u = 0; u < n; ++u) {
            if (!gone[u] && adj[vi][u]) cluster.push_back(static_cast<VarId>(u));
        }
        std::sort(cluster.begin(), cluster.end());
        for (VarId a : cluster) {
            for (VarId b : cluster) {
                if (a != b) adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
            }
        }
        gone[vi] = 1;
        clusters.push_back(std::move(cluster));
    }
    return clusters;
}

inline Cells ve_space(const Network& net, const std::vector<VarId>& order) {
    Cells total = 0;
    for (const auto& c : elimination_clusters(net, order)) total = saturating_add(total, net.instantiations(c));
    return total;
}

struct RcSpace {
    Cells cells_all = 0;
    Cells cells_live = 0;
};

/// Σ‖context(t)‖ over internal non-root nodes, and the same over live caches.
inline RcSpace rc_space(const Dtree& dt, const Network& net) {
    auto stats = dtree_stats(dt, net);
    return {stats.cache_cells_all, stats.cache_cells_live};
}

inline SpaceReport space_report(const Dtree& dt, const Network& net, const std::vector<VarId>& order) {
    const auto jt = induce_jointree(dt);
    const auto rc = rc_space(dt, net);
    SpaceReport r;
    r.hugin_cells = hugin_space(jt, net);
    r.shenoy_shafer_cells = shenoy_shafer_space(jt, net);
    r.ve_cells = ve_space(net, order);
    r.rc_cells_all = rc.cells_all;
    r.rc_cells_live = rc.cells_live;
    return r;
}

}  // namespace rcond

#endif  // RCOND_SPACES_HPP_
