#pragma once

#include <vector>

#include "cpmhs/model.hpp"

namespace cpmhs {

enum class StageActionKind { idle, generate, pump };

/// Action assigned to one stage for one step. Exactly one of the three kinds;
/// flow and power are zero unless the stage is active.
struct StageAction {
    StageActionKind kind = StageActionKind::idle;
    double flow_m3s = 0.0; ///< turbine flow (generate) or pump flow (pump)
    double power_w = 0.0;  ///< electrical output (generate) or draw (pump)

    bool operator==(const StageAction&) const = default;
};

/// Per-step controller output: one action per stage plus grid exchange and
/// the slack terms (curtailed surplus, unserved demand).
struct DispatchDecision {
    std::vector<StageAction> actions; ///< aligned with network.stages
    double grid_import_w = 0.0;
    double grid_export_w = 0.0;
    double curtailed_w = 0.0;
    double unserved_w = 0.0;

    bool operator==(const DispatchDecision&) const = default;
};

/// Generating-mode walk (deficit_w > 0): stages top to bottom. Each stage
/// runs the largest viable flow bounded by its rating, the upper reservoir's
/// drawdown to volume_min, and the lower reservoir's headroom; flows below
/// q_turbine_min are skipped, except that a deficit smaller than the
/// minimum-flow output is still served at minimum flow (the overshoot is
/// exported or curtailed). Residual deficit imports from the grid up to the
/// cap; the rest is unserved.
DispatchDecision generating_mode(const CascadeNetwork& network, const NetworkIndex& index,
                                 const std::vector<ReservoirState>& states, double deficit_w,
                                 double dt_s, const PhysicalConstants& constants = {});

/// Pumping-mode walk (surplus_w > 0): stages bottom to top. Each stage pumps
/// at the largest power bounded by its rating, the lower reservoir's water
/// above volume_min, and the upper reservoir's headroom. Residual surplus
/// exports up to the cap; the rest is curtailed.
DispatchDecision pumping_mode(const CascadeNetwork& network, const NetworkIndex& index,
                              const std::vector<ReservoirState>& states, double surplus_w,
                              double dt_s, const PhysicalConstants& constants = {});

/// Full per-step decision: deficit -> generating_mode, surplus -> pumping_mode,
/// zero -> all idle. The decision is feasible by construction: applying it
/// through the water-balance step violates no volume bound and no rating.
DispatchDecision dispatch_step(const CascadeNetwork& network, const NetworkIndex& index,
                               const std::vector<ReservoirState>& states, double net_load_w,
                               double dt_s, const PhysicalConstants& constants = {});

} // namespace cpmhs
