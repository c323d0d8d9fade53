#pragma once

// Exhaustive placement enumeration used to cross-check plan_cascade: every
// subset of interior vertices is tried, so it is exact for small profiles.

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include "cpmhs/planner.hpp"

namespace cpmhs::testing {

struct PlanOracle {
    bool feasible = false;
    int count = 0;         ///< fewest intermediates over all feasible chains
    double min_head_m = 0.0; ///< widest bottleneck among fewest-count chains
    std::vector<std::vector<int>> optimal_chains; ///< vertex-index chains achieving both
};

inline PlanOracle enumerate_plans(const TerrainProfile& profile,
                                  const PlanConstraints& constraints) {
    const auto& v = profile.vertices;
    const int n = static_cast<int>(v.size());
    const int interior = n - 2;
    PlanOracle best;

    std::vector<int> chain;
    for (unsigned mask = 0; mask < (1u << interior); ++mask) {
        chain.clear();
        chain.push_back(0);
        for (int b = 0; b < interior; ++b) {
            if (mask & (1u << b)) chain.push_back(1 + b);
        }
        chain.push_back(n - 1);

        bool ok = true;
        double min_head = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; ok && k + 1 < chain.size(); ++k) {
            const TerrainPoint& a = v[chain[k]];
            const TerrainPoint& b = v[chain[k + 1]];
            const double span = b.distance_km - a.distance_km;
            const double head = a.elevation_m - b.elevation_m;
            ok = span <= constraints.segment_max_km && head > 0.0 &&
                 head >= constraints.head_min_m;
            min_head = std::min(min_head, head);
        }
        if (!ok) continue;

        const int count = static_cast<int>(chain.size()) - 2;
        if (!best.feasible || count < best.count ||
            (count == best.count && min_head > best.min_head_m)) {
            best.feasible = true;
            best.count = count;
            best.min_head_m = min_head;
            best.optimal_chains.clear();
        }
        if (count == best.count && min_head == best.min_head_m) {
            best.optimal_chains.push_back(chain);
        }
    }
    return best;
}

/// Random non-increasing profile of 2..max_vertices vertices starting at
/// distance 0. Flat stretches and occasional long gaps make some profiles
/// infeasible on purpose.
inline TerrainProfile random_monotone_profile(std::mt19937_64& rng, int max_vertices = 12) {
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    TerrainProfile p;
    const int n = pick(2, max_vertices);
    double d = 0.0, e = uni(150.0, 400.0);
    for (int i = 0; i < n; ++i) {
        p.vertices.push_back({d, e});
        d += pick(0, 5) == 0 ? uni(0.9, 2.0) : uni(0.05, 0.8);
        e -= pick(0, 4) == 0 ? 0.0 : uni(0.5, 30.0);
    }
    return p;
}

} // namespace cpmhs::testing
