#pragma once

#include <string>
#include <vector>

#include "cpmhs/model.hpp"

namespace cpmhs {

struct TerrainPoint {
    double distance_km = 0.0; ///< measured from the upper lake
    double elevation_m = 0.0;

    bool operator==(const TerrainPoint&) const = default;
};

/// Elevation samples along the line from the upper lake (distance 0) to the
/// lower lake (last vertex). Distances strictly increase; candidate reservoir
/// sites are restricted to these vertices.
struct TerrainProfile {
    std::vector<TerrainPoint> vertices;

    bool operator==(const TerrainProfile&) const = default;
};

struct PlanConstraints {
    double segment_max_km = 1.0; ///< maximum horizontal span per stage
    double head_min_m = 5.0;     ///< minimum elevation drop per stage
    double cost_per_reservoir = 1.0; ///< penalty weight reported with the plan

    bool operator==(const PlanConstraints&) const = default;
};

struct PlanSegment {
    double span_km = 0.0;
    double head_m = 0.0;

    bool operator==(const PlanSegment&) const = default;
};

/// A chosen chain of sites from the upper lake down to the lower lake.
/// sites.front() and sites.back() are the lakes themselves; everything in
/// between is an intermediate reservoir.
struct CascadePlan {
    std::vector<TerrainPoint> sites;
    std::vector<PlanSegment> segments; ///< sites.size()-1 entries
    double total_head_m = 0.0;
    int n_intermediate = 0;
    double cost = 0.0; ///< n_intermediate * cost_per_reservoir

    bool operator==(const CascadePlan&) const = default;
};

/// Structural checks on a profile (>= 2 vertices, distances strictly
/// increasing from 0, finite values). Violations are returned as data.
std::vector<Violation> validate_profile(const TerrainProfile& profile);

/// Chooses intermediate sites by dynamic programming over profile vertices:
/// minimizes the number of intermediates subject to every span <= segment_max
/// and every head >= head_min (and > 0); among minimal-count plans, maximizes
/// the smallest segment head; remaining ties prefer the earliest vertex
/// index. Deterministic. Throws PlanError naming the blocking span when no
/// feasible chain exists, and std::invalid_argument on a malformed profile.
CascadePlan plan_cascade(const TerrainProfile& profile, const PlanConstraints& constraints);

/// Sizing applied to planner-generated intermediate reservoirs and stages.
struct StageDefaults {
    double surface_area_m2 = 1.0e4;
    double volume_min_m3 = 0.0;
    double volume_max_m3 = 0.05e6;
    double volume_init_m3 = 0.0;
    double loss_alpha = 0.0;
    double eta_turbine = 0.90;
    double eta_pump = 0.85;
    double q_turbine_min_m3s = 0.05;
    double q_turbine_max_m3s = 10.0;
    double p_pump_max_w = 5.0e6;
    double grid_import_max_w = 10.0e6;
    double grid_export_max_w = 10.0e6;

    bool operator==(const StageDefaults&) const = default;
};

/// Materializes a plan as a network: one reservoir per intermediate site
/// (sized from defaults, ids "<lower>_i<k>") and one stage per segment
/// (ids "<lower>_s<k>"). The plan endpoints must match the lake elevations
/// within 0.005 m. The result passes validate_network.
CascadeNetwork plan_to_network(const CascadePlan& plan, const Reservoir& upper,
                               const Reservoir& lower, const StageDefaults& defaults);

} // namespace cpmhs
