#include "cpmhs/dispatch.hpp"

#include <algorithm>
#include <vector>

#include "cpmhs/hydraulics.hpp"

namespace cpmhs {

namespace {

DispatchDecision all_idle(const CascadeNetwork& network) {
    DispatchDecision d;
    d.actions.assign(network.stages.size(), StageAction{});
    return d;
}

// Start-of-step water ledgers, one entry per reservoir. Water committed by
// one stage is never re-offered to another within the same step: each ledger
// only shrinks as stages commit, which keeps every decision feasible even
// when several stages share a reservoir. The alpha loss is deducted up front
// because the balance step applies it before the flow terms.
struct Ledgers {
    std::vector<double> avail_m3;    // drawable above volume_min
    std::vector<double> headroom_m3; // fillable below volume_max

    Ledgers(const CascadeNetwork& network, const std::vector<ReservoirState>& states) {
        const std::size_t n = network.reservoirs.size();
        avail_m3.resize(n);
        headroom_m3.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Reservoir& r = network.reservoirs[i];
            const double carried = states[i].volume_m3 * (1.0 - r.loss_alpha);
            avail_m3[i] = std::max(0.0, carried - r.volume_min_m3);
            headroom_m3[i] = std::max(0.0, r.volume_max_m3 - carried);
        }
    }
};

} // namespace

DispatchDecision generating_mode(const CascadeNetwork& network, const NetworkIndex& index,
                                 const std::vector<ReservoirState>& states, double deficit_w,
                                 double dt_s, const PhysicalConstants& constants) {
    DispatchDecision d = all_idle(network);
    Ledgers ledgers(network, states);
    double remaining_w = deficit_w;
    double excess_w = 0.0;

    for (int si : index.generation_order) {
        if (!(remaining_w > 0.0)) break;
        const Stage& s = network.stages[si];
        const int upper = index.stage_upper[si];
        const int lower = index.stage_lower[si];

        const double q_cap = std::min({s.q_turbine_max_m3s, ledgers.avail_m3[upper] / dt_s,
                                       ledgers.headroom_m3[lower] / dt_s});
        if (!(q_cap > 0.0) || q_cap < s.q_turbine_min_m3s) continue;

        const double q_wanted =
            flow_for_power(s.eta_turbine, constants.rho, constants.g, s.head_m, remaining_w);
        double q = 0.0;
        double p = 0.0;
        if (q_wanted >= q_cap) {
            // Capacity-limited: run at the cap, pass the residual downstream.
            q = q_cap;
            p = generation_power(s.eta_turbine, constants.rho, constants.g, s.head_m, q);
        } else if (q_wanted >= s.q_turbine_min_m3s) {
            // Deficit-limited: meet the residual exactly.
            q = q_wanted;
            p = remaining_w;
        } else {
            // The residual asks for less than the minimum viable flow. Running
            // at the minimum keeps the turbine inside its envelope; the
            // overshoot is exported or curtailed below.
            q = s.q_turbine_min_m3s;
            p = generation_power(s.eta_turbine, constants.rho, constants.g, s.head_m, q);
        }
        if (!(q > 0.0) || !(p > 0.0)) continue;

        d.actions[si] = {StageActionKind::generate, q, p};
        ledgers.avail_m3[upper] -= q * dt_s;
        ledgers.headroom_m3[lower] -= q * dt_s;
        if (p >= remaining_w) {
            excess_w = p - remaining_w;
            remaining_w = 0.0;
        } else {
            remaining_w -= p;
        }
    }

    if (remaining_w > 0.0) {
        d.grid_import_w = std::min(remaining_w, network.grid_import_max_w);
        d.unserved_w = remaining_w - d.grid_import_w;
    }
    if (excess_w > 0.0) {
        d.grid_export_w = std::min(excess_w, network.grid_export_max_w);
        d.curtailed_w = excess_w - d.grid_export_w;
    }
    return d;
}

DispatchDecision pumping_mode(const CascadeNetwork& network, const NetworkIndex& index,
                              const std::vector<ReservoirState>& states, double surplus_w,
                              double dt_s, const PhysicalConstants& constants) {
    DispatchDecision d = all_idle(network);
    Ledgers ledgers(network, states);
    double remaining_w = surplus_w;

    for (int si : index.pumping_order) {
        if (!(remaining_w > 0.0)) break;
        const Stage& s = network.stages[si];
        const int upper = index.stage_upper[si];
        const int lower = index.stage_lower[si];

        const double p_budget = std::min(s.p_pump_max_w, remaining_w);
        if (!(p_budget > 0.0)) continue;
        const double q_budget =
            pumping_flow(s.eta_pump, constants.rho, constants.g, s.head_m, p_budget);
        const double q_limit =
            std::min(ledgers.avail_m3[lower], ledgers.headroom_m3[upper]) / dt_s;

        double q = 0.0;
        double p = 0.0;
        if (q_budget <= q_limit) {
            // Power-limited: draw the budget exactly.
            q = q_budget;
            p = p_budget;
        } else {
            // Volume-limited: move what fits and draw the matching power.
            q = q_limit;
            p = q * constants.rho * constants.g * s.head_m / s.eta_pump;
        }
        if (!(q > 0.0) || !(p > 0.0)) continue;

        d.actions[si] = {StageActionKind::pump, q, p};
        ledgers.avail_m3[lower] -= q * dt_s;
        ledgers.headroom_m3[upper] -= q * dt_s;
        remaining_w -= p;
    }

    if (remaining_w > 0.0) {
        d.grid_export_w = std::min(remaining_w, network.grid_export_max_w);
        d.curtailed_w = remaining_w - d.grid_export_w;
    }
    return d;
}

DispatchDecision dispatch_step(const CascadeNetwork& network, const NetworkIndex& index,
                               const std::vector<ReservoirState>& states, double net_load_w,
                               double dt_s, const PhysicalConstants& constants) {
    if (net_load_w > 0.0) {
        return generating_mode(network, index, states, net_load_w, dt_s, constants);
    }
    if (net_load_w < 0.0) {
        return pumping_mode(network, index, states, -net_load_w, dt_s, constants);
    }
    return all_idle(network);
}

} // namespace cpmhs
