#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cpmhs/dispatch.hpp"
#include "cpmhs/model.hpp"

namespace cpmhs {

/// Per-reservoir slice of a step record: post-step state plus the natural
/// inflow applied during the step (kept so mass balance can be re-audited
/// from the records alone).
struct ReservoirStep {
    ReservoirState state;
    double natural_inflow_m3s = 0.0;

    bool operator==(const ReservoirStep&) const = default;
};

struct StageStep {
    double q_turbine_m3s = 0.0;
    double q_pump_m3s = 0.0;
    double p_gen_w = 0.0;
    double p_pump_w = 0.0;

    bool operator==(const StageStep&) const = default;
};

/// Everything that happened in one simulation step.
struct StepRecord {
    long step_index = 0;
    std::vector<ReservoirStep> reservoirs; ///< aligned with network.reservoirs
    std::vector<StageStep> stages;         ///< aligned with network.stages
    double load_w = 0.0;
    double renewable_w = 0.0;
    double grid_import_w = 0.0;
    double grid_export_w = 0.0;
    double unserved_w = 0.0;
    double curtailed_w = 0.0;

    bool operator==(const StepRecord&) const = default;
};

struct RunSummary {
    long n_steps = 0;
    double dt_s = 0.0;
    double load_wh = 0.0;
    double renewable_wh = 0.0;
    double generated_wh = 0.0;
    double pumped_wh = 0.0;
    double imported_wh = 0.0;
    double exported_wh = 0.0;
    double unserved_wh = 0.0;
    double curtailed_wh = 0.0;
    double spilled_m3 = 0.0;
    double evap_leak_m3 = 0.0;
    std::vector<double> final_volume_m3; ///< aligned with network.reservoirs

    bool operator==(const RunSummary&) const = default;
};

struct RunResult {
    std::vector<ReservoirState> initial;
    std::vector<StepRecord> records;
    RunSummary summary;

    bool operator==(const RunResult&) const = default;
};

/// Pluggable controller. The default is dispatch_step.
using DispatchPolicy = std::function<DispatchDecision(
    const CascadeNetwork&, const NetworkIndex&, const std::vector<ReservoirState>&,
    double net_load_w, double dt_s)>;

/// One water-balance step for one reservoir:
///   volume' = volume*(1 - alpha) + (q_in + natural_inflow - q_out)*dt
/// Overfill beyond volume_max spills (tracked in spilled_m3_cum); the alpha
/// loss accumulates in evap_leak_m3_cum. A result below volume_min throws
/// InfeasibilityError: dispatch must pre-clamp outflows. Undershoot within
/// rounding of the bound is snapped to it, not treated as a bug.
ReservoirState step_reservoir(const ReservoirState& state, const Reservoir& reservoir,
                              double q_in_m3s, double q_out_m3s, double natural_inflow_m3s,
                              double dt_s);

/// Time-stepped water-balance run over the whole network. Load and renewable
/// series must share length and step dt_s; natural inflow series are looked
/// up by each reservoir's natural_inflow_id. Output is deterministic for
/// identical inputs. Throws ValidationError when the network is invalid and
/// InfeasibilityError (with step and reservoir) when the policy over-draws.
RunResult run_simulation(const CascadeNetwork& network, const DispatchPolicy& policy,
                         const TimeSeries& load_w, const TimeSeries& renewable_w, double dt_s,
                         const std::map<std::string, TimeSeries>& natural_inflows = {});

/// Convenience overload with the rule-based controller.
RunResult run_simulation(const CascadeNetwork& network, const TimeSeries& load_w,
                         const TimeSeries& renewable_w, double dt_s,
                         const std::map<std::string, TimeSeries>& natural_inflows = {},
                         const PhysicalConstants& constants = {});

struct MassBalanceEntry {
    std::string reservoir_id;
    double residual_m3 = 0.0;
    double residual_rel = 0.0; ///< residual over the reservoir's total turnover
};

/// Conservation audit recomputed from the records alone:
///   residual = |V_final - V_init - dt*sum(net inflow) + spills + alpha losses|
/// The system row excludes stage transfers (they cancel between reservoirs).
struct MassBalanceReport {
    std::vector<MassBalanceEntry> per_reservoir;
    double system_residual_m3 = 0.0;
    double system_residual_rel = 0.0;

    double max_reservoir_residual_rel() const;
};

MassBalanceReport mass_balance_report(const CascadeNetwork& network, const RunResult& result);

/// Per-step power balance residual, relative to the step's power scale:
///   renewable + sum(p_gen) + import + unserved
///     vs load + sum(p_pump) + export + curtailed.
/// Returns the worst step's relative residual (0 for an empty run).
double max_power_balance_residual(const RunResult& result);

} // namespace cpmhs
