#include "cpmhs/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cpmhs {

double derive_head(double upper_elevation_m, double lower_elevation_m) {
    return upper_elevation_m - lower_elevation_m;
}

namespace {

bool finite(double v) { return std::isfinite(v); }

void check_reservoir(const Reservoir& r, std::vector<Violation>& out) {
    if (r.id.empty()) {
        out.push_back({r.name.empty() ? "<unnamed>" : r.name, "reservoir id must not be empty"});
        return;
    }
    if (!finite(r.elevation_m)) {
        out.push_back({r.id, "elevation_m must be finite"});
    }
    if (!(r.surface_area_m2 > 0.0) || !finite(r.surface_area_m2)) {
        out.push_back({r.id, "surface_area_m2 > 0 failed"});
    }
    const bool min_unbounded = is_unbounded_volume(r.volume_min_m3) && r.volume_min_m3 < 0.0;
    const bool max_unbounded = is_unbounded_volume(r.volume_max_m3) && r.volume_max_m3 > 0.0;
    if (!min_unbounded && r.volume_min_m3 < 0.0) {
        out.push_back({r.id, "0 <= volume_min_m3 failed"});
    }
    if (!(r.volume_min_m3 <= r.volume_init_m3 && r.volume_init_m3 <= r.volume_max_m3)) {
        out.push_back({r.id, "volume_min_m3 <= volume_init_m3 <= volume_max_m3 failed"});
    }
    if (!max_unbounded && !finite(r.volume_max_m3)) {
        out.push_back({r.id, "volume_max_m3 must be finite"});
    }
    if (!(r.loss_alpha >= 0.0 && r.loss_alpha < 1.0)) {
        out.push_back({r.id, "0 <= loss_alpha < 1 failed"});
    }
}

void check_stage(const Stage& s, const CascadeNetwork& net,
                 const std::unordered_map<std::string, int>& res_by_id,
                 std::vector<Violation>& out) {
    if (s.id.empty()) {
        out.push_back({"<unnamed>", "stage id must not be empty"});
        return;
    }
    auto upper = res_by_id.find(s.upper_id);
    auto lower = res_by_id.find(s.lower_id);
    if (upper == res_by_id.end()) {
        out.push_back({s.id, "upper_id '" + s.upper_id + "' references no reservoir"});
    }
    if (lower == res_by_id.end()) {
        out.push_back({s.id, "lower_id '" + s.lower_id + "' references no reservoir"});
    }
    if (!s.upper_id.empty() && s.upper_id == s.lower_id) {
        out.push_back({s.id, "upper_id and lower_id must differ"});
    }
    if (!(s.head_m > 0.0)) {
        out.push_back({s.id, "head_m > 0 failed"});
    }
    if (upper != res_by_id.end() && lower != res_by_id.end()) {
        const double derived = derive_head(net.reservoirs[upper->second].elevation_m,
                                           net.reservoirs[lower->second].elevation_m);
        if (!(std::abs(derived - s.head_m) <= kHeadConsistencyTolM)) {
            std::ostringstream msg;
            msg << "head_m " << s.head_m << " inconsistent with reservoir elevations (derived "
                << derived << ", tolerance " << kHeadConsistencyTolM << " m)";
            out.push_back({s.id, msg.str()});
        }
    }
    if (!(s.eta_turbine > 0.0 && s.eta_turbine <= 1.0)) {
        out.push_back({s.id, "0 < eta_turbine <= 1 failed"});
    }
    if (!(s.eta_pump > 0.0 && s.eta_pump <= 1.0)) {
        out.push_back({s.id, "0 < eta_pump <= 1 failed"});
    }
    if (!(s.q_turbine_min_m3s >= 0.0 && s.q_turbine_min_m3s <= s.q_turbine_max_m3s)) {
        out.push_back({s.id, "0 <= q_turbine_min_m3s <= q_turbine_max_m3s failed"});
    }
    if (!(s.p_pump_max_w >= 0.0)) {
        out.push_back({s.id, "p_pump_max_w >= 0 failed"});
    }
    if (!(s.distance_km >= 0.0)) {
        out.push_back({s.id, "distance_km >= 0 failed"});
    }
}

// Cycle detection over the directed stage graph (upper -> lower).
bool has_cycle(const CascadeNetwork& net, const std::unordered_map<std::string, int>& res_by_id) {
    const int n = static_cast<int>(net.reservoirs.size());
    std::vector<std::vector<int>> adj(n);
    for (const auto& s : net.stages) {
        auto u = res_by_id.find(s.upper_id);
        auto l = res_by_id.find(s.lower_id);
        if (u == res_by_id.end() || l == res_by_id.end()) continue;
        adj[u->second].push_back(l->second);
    }
    std::vector<int> color(n, 0); // 0 unvisited, 1 on stack, 2 done
    std::vector<std::pair<int, size_t>> stack;
    for (int start = 0; start < n; ++start) {
        if (color[start] != 0) continue;
        stack.push_back({start, 0});
        color[start] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < adj[v].size()) {
                int w = adj[v][next++];
                if (color[w] == 1) return true;
                if (color[w] == 0) {
                    color[w] = 1;
                    stack.push_back({w, 0});
                }
            } else {
                color[v] = 2;
                stack.pop_back();
            }
        }
    }
    return false;
}

std::unordered_map<std::string, int> reservoir_ids(const CascadeNetwork& net,
                                                   std::vector<Violation>* out) {
    std::unordered_map<std::string, int> by_id;
    for (int i = 0; i < static_cast<int>(net.reservoirs.size()); ++i) {
        const auto& id = net.reservoirs[i].id;
        if (id.empty()) continue;
        if (!by_id.emplace(id, i).second && out) {
            out->push_back({id, "duplicate reservoir id"});
        }
    }
    return by_id;
}

} // namespace

std::vector<Violation> validate_network(const CascadeNetwork& network) {
    std::vector<Violation> out;
    auto res_by_id = reservoir_ids(network, &out);

    std::set<std::string> stage_ids;
    for (const auto& s : network.stages) {
        if (!s.id.empty() && !stage_ids.insert(s.id).second) {
            out.push_back({s.id, "duplicate stage id"});
        }
    }

    for (const auto& r : network.reservoirs) check_reservoir(r, out);
    for (const auto& s : network.stages) check_stage(s, network, res_by_id, out);

    if (has_cycle(network, res_by_id)) {
        out.push_back({"<network>", "stage graph is acyclic failed"});
    }
    if (!(network.grid_import_max_w >= 0.0)) {
        out.push_back({"<network>", "grid_import_max_w >= 0 failed"});
    }
    if (!(network.grid_export_max_w >= 0.0)) {
        out.push_back({"<network>", "grid_export_max_w >= 0 failed"});
    }
    return out;
}

std::string format_violations(const std::vector<Violation>& report) {
    std::ostringstream os;
    for (const auto& v : report) {
        os << v.entity_id << ": " << v.message << "\n";
    }
    return os.str();
}

NetworkIndex build_index(const CascadeNetwork& network) {
    NetworkIndex idx;
    for (int i = 0; i < static_cast<int>(network.reservoirs.size()); ++i) {
        if (!idx.reservoir_by_id.emplace(network.reservoirs[i].id, i).second) {
            throw std::invalid_argument("duplicate reservoir id '" + network.reservoirs[i].id + "'");
        }
    }
    const int n_stages = static_cast<int>(network.stages.size());
    idx.stage_upper.resize(n_stages);
    idx.stage_lower.resize(n_stages);
    for (int i = 0; i < n_stages; ++i) {
        const auto& s = network.stages[i];
        if (!idx.stage_by_id.emplace(s.id, i).second) {
            throw std::invalid_argument("duplicate stage id '" + s.id + "'");
        }
        auto u = idx.reservoir_by_id.find(s.upper_id);
        auto l = idx.reservoir_by_id.find(s.lower_id);
        if (u == idx.reservoir_by_id.end() || l == idx.reservoir_by_id.end()) {
            throw std::invalid_argument("stage '" + s.id + "' references unknown reservoirs");
        }
        idx.stage_upper[i] = u->second;
        idx.stage_lower[i] = l->second;
    }

    idx.generation_order.resize(n_stages);
    idx.pumping_order.resize(n_stages);
    for (int i = 0; i < n_stages; ++i) idx.generation_order[i] = idx.pumping_order[i] = i;

    std::stable_sort(idx.generation_order.begin(), idx.generation_order.end(),
                     [&](int a, int b) {
                         return network.reservoirs[idx.stage_upper[a]].elevation_m >
                                network.reservoirs[idx.stage_upper[b]].elevation_m;
                     });
    std::stable_sort(idx.pumping_order.begin(), idx.pumping_order.end(),
                     [&](int a, int b) {
                         return network.reservoirs[idx.stage_lower[a]].elevation_m <
                                network.reservoirs[idx.stage_lower[b]].elevation_m;
                     });
    return idx;
}

std::vector<ReservoirState> initial_states(const CascadeNetwork& network) {
    std::vector<ReservoirState> states;
    states.reserve(network.reservoirs.size());
    for (const auto& r : network.reservoirs) {
        states.push_back({r.volume_init_m3, 0.0, 0.0});
    }
    return states;
}

} // namespace cpmhs
