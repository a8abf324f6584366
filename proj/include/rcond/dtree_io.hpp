#ifndef RCOND_DTREE_IO_HPP_
#define RCOND_DTREE_IO_HPP_

#include <sstream>
#include <string>

#include <json.hpp>

#include "rcond/dtree.hpp"

namespace rcond {

namespace detail {

inline nlohmann::json var_names(const Network& net, const VarSet& vars) {
    auto out = nlohmann::json::array();
    for (VarId v : vars) out.push_back(net.variable(v).name);
    return out;
}

}  // namespace detail

/// Nested export: {"leaf": "C"} or {"left": ..., "right": ..., "cutset": [...], "context": [...]}.
inline nlohmann::json dtree_to_json(const Dtree& dt, const Network& net) {
    auto emit = [&](auto& self, NodeId id) -> nlohmann::json {
        const auto& n = dt.node(id);
        if (n.is_leaf()) return {{"leaf", net.variable(n.leaf_var).name}};
        nlohmann::json j;
        j["left"] = self(self, n.left);
        j["right"] = self(self, n.right);
        j["cutset"] = detail::var_names(net, n.cutset);
        j["context"] = detail::var_names(net, n.context);
        j["cache"] = to_string(n.cache_state);
        return j;
    };
    return emit(emit, dt.root());
}

/// Inverse of dtree_to_json; annotation fields in the input are ignored and
/// recomputed.
inline Dtree dtree_from_json(const nlohmann::json& doc, const Network& net) {
    Dtree dt;
    auto build = [&](auto& self, const nlohmann::json& j) -> NodeId {
        if (!j.is_object()) throw DtreeError("dtree document: node must be an object");
        if (j.contains("leaf")) {
            const auto name = j.at("leaf").get<std::string>();
            auto v = net.find(name);
            if (!v) throw DtreeError("dtree document: unknown variable '" + name + "'");
            return dt.add_leaf(*v);
        }
        if (!j.contains("left") || !j.contains("right")) throw DtreeError("dtree document: internal node needs left and right");
        NodeId l = self(self, j.at("left"));
        NodeId r = self(self, j.at("right"));
        return dt.add_internal(l, r);
    };
    try {
        dt.set_root(build(build, doc));
    } catch (const nlohmann::json::exception& e) {
        throw DtreeError(std::string("dtree document: ") + e.what());
    }
    annotate(dt, net);
    mark_dead_caches(dt);
    return dt;
}

inline Dtree parse_dtree(std::string_view text, const Network& net) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DtreeError(std::string("malformed dtree document: ") + e.what());
    }
    return dtree_from_json(doc, net);
}

/// Graphviz rendering; internal nodes show cutset / context, dead caches are dashed.
inline std::string dtree_to_dot(const Dtree& dt, const Network& net) {
    auto names = [&](const VarSet& s) {
        std::string out;
        for (VarId v : s) {
            if (!out.empty()) out += ",";
            out += net.variable(v).name;
        }
        return out;
    };
    std::ostringstream os;
    os << "digraph dtree {\n  node [shape=box];\n";
    for (NodeId id : dt.postorder()) {
        const auto& n = dt.node(id);
        os << "  n" << id << " [label=\"";
        if (n.is_leaf()) {
            os << names(n.vars) << "\" shape=ellipse];\n";
            continue;
        }
        os << "{" << names(n.cutset) << "} / {" << names(n.context) << "}\"";
        if (n.cache_state == CacheState::dead) os << " style=dashed";
        os << "];\n";
        os << "  n" << id << " -> n" << n.left << ";\n";
        os << "  n" << id << " -> n" << n.right << ";\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace rcond

#endif  // RCOND_DTREE_IO_HPP_
