#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cpmhs/errors.hpp"

namespace cpmhs {

/// Water density and gravitational acceleration used by all hydraulic
/// formulas. Defaults are fresh water at standard gravity.
struct PhysicalConstants {
    double rho = 1000.0; ///< kg/m^3
    double g = 9.81;     ///< m/s^2

    bool operator==(const PhysicalConstants&) const = default;
};

/// Volume bound magnitude at or beyond which a reservoir is treated as
/// unbounded (an infinite sink/source such as a great lake). Finite so that
/// volume arithmetic never produces inf/NaN.
inline constexpr double kUnboundedVolumeM3 = 1e30;

/// Stage heads stored in a file must agree with the reservoir elevations
/// within this tolerance (meters).
inline constexpr double kHeadConsistencyTolM = 0.005;

struct Reservoir {
    std::string id;
    std::string name;
    double elevation_m = 0.0;      ///< surface elevation above sea level
    double surface_area_m2 = 0.0;
    double volume_min_m3 = 0.0;
    double volume_max_m3 = 0.0;
    double volume_init_m3 = 0.0;
    double loss_alpha = 0.0;       ///< per-timestep evaporation+leakage fraction, in [0,1)
    std::string natural_inflow_id; ///< key of a bound inflow series; empty = none

    bool operator==(const Reservoir&) const = default;
};

/// Returns true when the bound magnitude marks an unbounded sink/source.
inline bool is_unbounded_volume(double bound_m3) {
    return bound_m3 >= kUnboundedVolumeM3 || bound_m3 <= -kUnboundedVolumeM3;
}

/// A directed pump/turbine link from an upper reservoir down to a lower one.
struct Stage {
    std::string id;
    std::string upper_id;
    std::string lower_id;
    double head_m = 0.0;            ///< elevation difference, upper - lower
    double distance_km = 0.0;       ///< horizontal separation
    double eta_turbine = 0.90;
    double eta_pump = 0.85;
    double q_turbine_min_m3s = 0.0; ///< minimum viable turbine flow
    double q_turbine_max_m3s = 0.0; ///< turbine flow rating
    double p_pump_max_w = 0.0;      ///< pump power rating

    bool operator==(const Stage&) const = default;
};

/// An ordered chain (or tree) of reservoirs joined by stages, plus grid
/// exchange limits. Stages are declared top-to-bottom per branch.
struct CascadeNetwork {
    std::vector<Reservoir> reservoirs;
    std::vector<Stage> stages;
    double grid_import_max_w = 0.0;
    double grid_export_max_w = 0.0;

    bool operator==(const CascadeNetwork&) const = default;
};

enum class SeriesUnit { watts, cubic_meters_per_second };

/// Fixed-step sequence of values with a declared unit.
struct TimeSeries {
    double step_seconds = 3600.0;
    SeriesUnit unit = SeriesUnit::watts;
    std::vector<double> values;

    bool operator==(const TimeSeries&) const = default;
};

/// volume snapshot of one reservoir between steps.
struct ReservoirState {
    double volume_m3 = 0.0;
    double spilled_m3_cum = 0.0;   ///< cumulative overflow discarded at volume_max
    double evap_leak_m3_cum = 0.0; ///< cumulative alpha losses

    bool operator==(const ReservoirState&) const = default;
};

/// head_m = upper - lower. Negative results are flagged by validate_network,
/// never here.
double derive_head(double upper_elevation_m, double lower_elevation_m);

/// Checks every structural invariant of a network and returns one violation
/// per failure (empty report = valid). Side-effect free and idempotent.
std::vector<Violation> validate_network(const CascadeNetwork& network);

/// Renders a report as one line per violation.
std::string format_violations(const std::vector<Violation>& report);

/// Index structures derived from a network: id lookup tables, per-stage
/// reservoir indices, and the deterministic stage orderings used by the
/// dispatch rules (generation walks stages by descending upper elevation,
/// pumping by ascending lower elevation; ties by declaration order).
struct NetworkIndex {
    std::unordered_map<std::string, int> reservoir_by_id;
    std::unordered_map<std::string, int> stage_by_id;
    std::vector<int> stage_upper;      ///< reservoir index of each stage's upper end
    std::vector<int> stage_lower;
    std::vector<int> generation_order; ///< stage indices, topmost first
    std::vector<int> pumping_order;    ///< stage indices, bottom first
};

/// Builds the index. Throws std::invalid_argument on dangling reservoir
/// references or duplicate ids; run validate_network first for a full report.
NetworkIndex build_index(const CascadeNetwork& network);

/// Initial per-reservoir states (volume_init, zero counters), aligned with
/// network.reservoirs.
std::vector<ReservoirState> initial_states(const CascadeNetwork& network);

} // namespace cpmhs
