#ifndef RCOND_NETWORK_IO_HPP_
#define RCOND_NETWORK_IO_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rcond/model.hpp"

namespace rcond {

namespace detail {

inline VarId resolve_var(const std::unordered_map<std::string, VarId>& ids, const std::string& name,
                         std::string_view what) {
    auto it = ids.find(name);
    if (it == ids.end()) throw ModelError("unknown " + std::string(what) + " '" + name + "'");
    return it->second;
}

}  // namespace detail

/// Parses a network document:
///   {"variables": [{"name": "A", "states": ["1","2"]}, ...],
///    "cpts": [{"child": "C", "parents": ["A","B"], "kind": "table", "table": [...]},
///             {"child": "Y", "parents": [...], "kind": "noisy_or",
///              "trigger": ["2", ...], "inhibitor": [...], "leak": 0.0}]}
/// Variable ids follow document order.
inline Network parse_network(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("malformed network document: ") + e.what());
    }
    try {
        if (!doc.is_object() || !doc.contains("variables") || !doc.contains("cpts")) {
            throw ModelError("malformed network document: expected object with 'variables' and 'cpts'");
        }
        std::vector<Variable> vars;
        std::unordered_map<std::string, VarId> ids;
        for (const auto& jv : doc.at("variables")) {
            Variable v;
            v.id = static_cast<VarId>(vars.size());
            v.name = jv.at("name").get<std::string>();
            v.states = jv.at("states").get<std::vector<std::string>>();
            if (!ids.emplace(v.name, v.id).second) throw ModelError("duplicate variable name '" + v.name + "'");
            vars.push_back(std::move(v));
        }

        std::vector<Cpt> cpts;
        for (const auto& jc : doc.at("cpts")) {
            const VarId child = detail::resolve_var(ids, jc.at("child").get<std::string>(), "child");
            std::vector<VarId> parents;
            if (jc.contains("parents")) {
                for (const auto& p : jc.at("parents")) parents.push_back(detail::resolve_var(ids, p.get<std::string>(), "parent"));
            }
            const std::string kind = jc.value("kind", std::string("table"));
            if (kind == "table") {
                cpts.emplace_back(TabularCpt{child, std::move(parents), jc.at("table").get<std::vector<double>>()});
            } else if (kind == "noisy_or") {
                NoisyOrCpt n{child, std::move(parents), {}, jc.at("inhibitor").get<std::vector<double>>(),
                             jc.value("leak", 0.0)};
                const auto labels = jc.at("trigger").get<std::vector<std::string>>();
                if (labels.size() != n.parents.size()) {
                    throw ModelError("noisy-or CPT for '" + vars[static_cast<std::size_t>(child)].name +
                                     "': trigger length does not match parents");
                }
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    const auto& pv = vars[static_cast<std::size_t>(n.parents[i])];
                    auto s = pv.state_index(labels[i]);
                    if (!s) throw ModelError("unknown trigger state '" + labels[i] + "' for '" + pv.name + "'");
                    n.trigger.push_back(*s);
                }
                cpts.emplace_back(std::move(n));
            } else {
                throw ModelError("unknown CPT kind '" + kind + "'");
            }
        }
        return Network(std::move(vars), std::move(cpts));
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed network document: ") + e.what());
    }
}

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json doc;
    doc["variables"] = nlohmann::json::array();
    for (const auto& v : net.variables()) doc["variables"].push_back({{"name", v.name}, {"states", v.states}});
    doc["cpts"] = nlohmann::json::array();
    auto names = [&](const std::vector<VarId>& ids) {
        std::vector<std::string> out;
        for (VarId id : ids) out.push_back(net.variable(id).name);
        return out;
    };
    for (const auto& cpt : net.cpts()) {
        nlohmann::json jc;
        jc["child"] = net.variable(cpt_child(cpt)).name;
        jc["parents"] = names(cpt_parents(cpt));
        if (const auto* t = std::get_if<TabularCpt>(&cpt)) {
            jc["kind"] = "table";
            jc["table"] = t->entries;
        } else {
            const auto& n = std::get<NoisyOrCpt>(cpt);
            jc["kind"] = "noisy_or";
            std::vector<std::string> trig;
            for (std::size_t i = 0; i < n.parents.size(); ++i) {
                trig.push_back(net.variable(n.parents[i]).states[static_cast<std::size_t>(n.trigger[i])]);
            }
            jc["trigger"] = trig;
            jc["inhibitor"] = n.inhibitor;
            jc["leak"] = n.leak;
        }
        doc["cpts"].push_back(std::move(jc));
    }
    return doc;
}

inline std::string serialize_network(const Network& net) { return network_to_json(net).dump(2); }

/// Evidence document: {"C": "3", "A": "1"} with state labels.
inline Evidence parse_evidence(std::string_view text, const Network& net) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("malformed evidence document: ") + e.what());
    }
    if (!doc.is_object()) throw ModelError("malformed evidence document: expected an object");
    Evidence ev;
    for (const auto& [name, label] : doc.items()) {
        auto v = net.find(name);
        if (!v) throw ModelError("evidence on unknown variable '" + name + "'");
        if (!label.is_string()) throw ModelError("evidence for '" + name + "' must be a state label");
        auto s = net.variable(*v).state_index(label.get<std::string>());
        if (!s) throw ModelError("unknown state '" + label.get<std::string>() + "' for '" + name + "'");
        ev.assignments[*v] = *s;
    }
    return ev;
}

inline std::string serialize_evidence(const Evidence& ev, const Network& net) {
    nlohmann::json doc = nlohmann::json::object();
    for (auto [v, s] : ev.assignments) {
        const auto& var = net.variable(v);
        doc[var.name] = var.states[static_cast<std::size_t>(s)];
    }
    return doc.dump();
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Network load_network(const std::string& path) { return parse_network(read_text_file(path)); }

}  // namespace rcond

#endif  // RCOND_NETWORK_IO_HPP_
