#ifndef RCOND_VARSET_HPP_
#define RCOND_VARSET_HPP_

#include <algorithm>
#include <iterator>
#include <vector>

#include "rcond/model.hpp"

namespace rcond {

/// Variable sets are kept as sorted, duplicate-free vectors of ids; the sort
/// order doubles as the mixed-radix order for indexing (last id fastest).
using VarSet = std::vector<VarId>;

inline VarSet set_union(const VarSet& a, const VarSet& b) {
    VarSet out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline VarSet set_intersection(const VarSet& a, const VarSet& b) {
    VarSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline VarSet set_difference(const VarSet& a, const VarSet& b) {
    VarSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

/// a ⊇ b
inline bool set_includes(const VarSet& a, const VarSet& b) {
    return std::includes(a.begin(), a.end(), b.begin(), b.end());
}

inline bool set_contains(const VarSet& a, VarId v) { return std::binary_search(a.begin(), a.end(), v); }

}  // namespace rcond

#endif  // RCOND_VARSET_HPP_
