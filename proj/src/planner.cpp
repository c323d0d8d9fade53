#include "cpmhs/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cpmhs {

std::vector<Violation> validate_profile(const TerrainProfile& profile) {
    std::vector<Violation> out;
    const auto& v = profile.vertices;
    if (v.size() < 2) {
        out.push_back({"<profile>", "at least 2 vertices required"});
        return out;
    }
    if (v.front().distance_km != 0.0) {
        out.push_back({"<profile>", "first vertex must lie at distance 0"});
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].distance_km) || !std::isfinite(v[i].elevation_m)) {
            std::ostringstream msg;
            msg << "vertex " << i << " has a non-finite coordinate";
            out.push_back({"<profile>", msg.str()});
        }
        if (i > 0 && !(v[i].distance_km > v[i - 1].distance_km)) {
            std::ostringstream msg;
            msg << "distances must strictly increase (vertex " << i << ")";
            out.push_back({"<profile>", msg.str()});
        }
    }
    return out;
}

namespace {

bool segment_ok(const TerrainPoint& from, const TerrainPoint& to,
                const PlanConstraints& constraints) {
    const double span = to.distance_km - from.distance_km;
    const double head = from.elevation_m - to.elevation_m;
    return span <= constraints.segment_max_km && head > 0.0 && head >= constraints.head_min_m;
}

[[noreturn]] void throw_blocked(const TerrainProfile& profile,
                                const PlanConstraints& constraints,
                                const std::vector<int>& hops) {
    // The furthest vertex any feasible chain reaches marks where planning
    // stalls; everything between it and the span limit is the blocking span.
    int furthest = 0;
    for (std::size_t i = 0; i < hops.size(); ++i) {
        if (hops[i] >= 0) furthest = static_cast<int>(i);
    }
    const TerrainPoint& stall = profile.vertices[furthest];
    const double span_end = std::min(stall.distance_km + constraints.segment_max_km,
                                     profile.vertices.back().distance_km);
    std::ostringstream msg;
    msg << "no placement satisfies the constraints: no vertex within " << constraints.segment_max_km
        << " km of distance " << stall.distance_km << " km (elevation " << stall.elevation_m
        << " m) drops at least " << constraints.head_min_m << " m; blocking span "
        << stall.distance_km << ".." << span_end << " km";
    throw PlanError(msg.str());
}

} // namespace

CascadePlan plan_cascade(const TerrainProfile& profile, const PlanConstraints& constraints) {
    auto report = validate_profile(profile);
    if (!report.empty()) {
        throw std::invalid_argument("malformed terrain profile: " + format_violations(report));
    }
    if (!(constraints.segment_max_km > 0.0) || !(constraints.head_min_m >= 0.0)) {
        throw std::invalid_argument("segment_max_km must be > 0 and head_min_m >= 0");
    }

    const auto& v = profile.vertices;
    const int n = static_cast<int>(v.size());
    constexpr double inf = std::numeric_limits<double>::infinity();

    // Layered shortest-path DP over profile vertices: hops[i] is the fewest
    // segments reaching vertex i, bottleneck[i] the largest achievable
    // minimum segment head among hops[i]-segment chains, parent[i] the
    // predecessor realizing it (ties to the earliest vertex index).
    std::vector<int> hops(n, -1), parent(n, -1);
    std::vector<double> bottleneck(n, -inf);
    hops[0] = 0;
    bottleneck[0] = inf;

    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            if (hops[j] < 0 || !segment_ok(v[j], v[i], constraints)) continue;
            const double head = v[j].elevation_m - v[i].elevation_m;
            const double through = std::min(bottleneck[j], head);
            const bool fewer = hops[i] < 0 || hops[j] + 1 < hops[i];
            const bool same_but_wider = hops[i] == hops[j] + 1 && through > bottleneck[i];
            if (fewer || same_but_wider) {
                hops[i] = hops[j] + 1;
                bottleneck[i] = through;
                parent[i] = j;
            }
        }
    }
    if (hops[n - 1] < 0) throw_blocked(profile, constraints, hops);

    CascadePlan plan;
    for (int i = n - 1; i >= 0; i = parent[i]) {
        plan.sites.push_back(v[i]);
        if (i == 0) break;
    }
    std::reverse(plan.sites.begin(), plan.sites.end());

    plan.segments.reserve(plan.sites.size() - 1);
    for (std::size_t k = 0; k + 1 < plan.sites.size(); ++k) {
        plan.segments.push_back({plan.sites[k + 1].distance_km - plan.sites[k].distance_km,
                                 plan.sites[k].elevation_m - plan.sites[k + 1].elevation_m});
    }
    plan.total_head_m = v.front().elevation_m - v.back().elevation_m;
    plan.n_intermediate = static_cast<int>(plan.sites.size()) - 2;
    plan.cost = plan.n_intermediate * constraints.cost_per_reservoir;
    return plan;
}

CascadeNetwork plan_to_network(const CascadePlan& plan, const Reservoir& upper,
                               const Reservoir& lower, const StageDefaults& defaults) {
    if (plan.sites.size() < 2) {
        throw std::invalid_argument("plan must span at least two sites");
    }
    if (std::abs(plan.sites.front().elevation_m - upper.elevation_m) > kHeadConsistencyTolM ||
        std::abs(plan.sites.back().elevation_m - lower.elevation_m) > kHeadConsistencyTolM) {
        throw std::invalid_argument("plan endpoints do not match the lake elevations");
    }

    CascadeNetwork net;
    net.grid_import_max_w = defaults.grid_import_max_w;
    net.grid_export_max_w = defaults.grid_export_max_w;
    net.reservoirs.push_back(upper);

    const std::string base = lower.id;
    for (std::size_t k = 1; k + 1 < plan.sites.size(); ++k) {
        Reservoir r;
        r.id = base + "_i" + std::to_string(k);
        r.name = (lower.name.empty() ? lower.id : lower.name) + " intermediate " +
                 std::to_string(k);
        r.elevation_m = plan.sites[k].elevation_m;
        r.surface_area_m2 = defaults.surface_area_m2;
        r.volume_min_m3 = defaults.volume_min_m3;
        r.volume_max_m3 = defaults.volume_max_m3;
        r.volume_init_m3 = defaults.volume_init_m3;
        r.loss_alpha = defaults.loss_alpha;
        net.reservoirs.push_back(r);
    }
    net.reservoirs.push_back(lower);

    for (std::size_t k = 0; k < plan.segments.size(); ++k) {
        const Reservoir& from = net.reservoirs[k];
        const Reservoir& to = net.reservoirs[k + 1];
        Stage s;
        s.id = base + "_s" + std::to_string(k + 1);
        s.upper_id = from.id;
        s.lower_id = to.id;
        s.head_m = derive_head(from.elevation_m, to.elevation_m);
        s.distance_km = plan.segments[k].span_km;
        s.eta_turbine = defaults.eta_turbine;
        s.eta_pump = defaults.eta_pump;
        s.q_turbine_min_m3s = defaults.q_turbine_min_m3s;
        s.q_turbine_max_m3s = defaults.q_turbine_max_m3s;
        s.p_pump_max_w = defaults.p_pump_max_w;
        net.stages.push_back(s);
    }

    auto report = validate_network(net);
    if (!report.empty()) {
        throw ValidationError("planned network failed validation", std::move(report));
    }
    return net;
}

} // namespace cpmhs
