#ifndef RCOND_REPORT_HPP_
#define RCOND_REPORT_HPP_

#include <cmath>
#include <string>

#include <json.hpp>

#include "rcond/dtree.hpp"
#include "rcond/engine.hpp"
#include "rcond/kb.hpp"
#include "rcond/spaces.hpp"

namespace rcond {

/// {"probability", "log10", "rc_calls", "cache": {...}, "kb": {...}}; log10 is
/// null when the probability is exactly zero.
inline nlohmann::json to_json(const QueryResult& r) {
    nlohmann::json j;
    j["probability"] = r.probability;
    j["log10"] = std::isfinite(r.log_probability) ? nlohmann::json(r.log10_probability()) : nlohmann::json(nullptr);
    j["rc_calls"] = r.rc_calls;
    j["cache"] = {{"hits", r.cache_hits}, {"misses", r.cache_misses}, {"written", r.entries_written}};
    j["kb"] = {{"enabled", r.kb_enabled}, {"skips", r.kb_skips}};
    j["kb_evidence_contradiction"] = r.kb_evidence_contradiction;
    j["log_space"] = r.log_domain;
    return j;
}

inline nlohmann::json to_json(const SpaceReport& s) {
    return {{"hugin_cells", s.hugin_cells},
            {"shenoy_shafer_cells", s.shenoy_shafer_cells},
            {"ve_cells", s.ve_cells},
            {"rc_cells_all", s.rc_cells_all},
            {"rc_cells_live", s.rc_cells_live},
            {"bytes_per_cell", SpaceReport::kBytesPerCell}};
}

inline nlohmann::json to_json(const DtreeStats& s) {
    return {{"width", s.width},
            {"context_width", s.context_width},
            {"cache_cells_all", s.cache_cells_all},
            {"cache_cells_live", s.cache_cells_live},
            {"dead_caches", s.dead_caches},
            {"internal_nodes", s.internal_nodes},
            {"leaves", s.leaves}};
}

struct KbSize {
    std::size_t clauses = 0;
    std::size_t literals = 0;
};

inline nlohmann::json to_json(const KbSize& k) { return {{"clauses", k.clauses}, {"literals", k.literals}}; }

}  // namespace rcond

#endif  // RCOND_REPORT_HPP_
