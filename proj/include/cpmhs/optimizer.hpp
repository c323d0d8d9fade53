#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpmhs/planner.hpp"
#include "cpmhs/simulation.hpp"

namespace cpmhs {

/// Weighted-sum fitness of one simulated configuration (lower is better):
///   w_unserved*E_unserved + w_import*E_import + w_spill*V_spill
///     - w_export_credit*E_export + w_reservoir*N_reservoirs
/// with energies in Wh and spill in m^3.
struct FitnessWeights {
    double w_unserved = 1.0;       ///< per Wh of unserved demand
    double w_import = 0.25;        ///< per Wh imported
    double w_spill = 0.0;          ///< per m^3 spilled
    double w_export_credit = 0.05; ///< per Wh exported (credited)
    double w_reservoir = 1000.0;   ///< per reservoir built

    bool operator==(const FitnessWeights&) const = default;
};

/// One cascade branch that the search may rebuild: the fixed upper and lower
/// lakes, the horizontal span between them, and the sizing defaults for
/// generated intermediates. Candidate intermediates are spaced evenly over
/// the span with evenly split heads.
struct BranchTemplate {
    Reservoir upper;
    Reservoir lower;
    double span_km = 0.0;
    StageDefaults defaults;

    bool operator==(const BranchTemplate&) const = default;
};

struct ConfigTemplate {
    std::vector<BranchTemplate> branches;
    double grid_import_max_w = 0.0;
    double grid_export_max_w = 0.0;

    bool operator==(const ConfigTemplate&) const = default;
};

/// Discrete candidate lists, one axis per parameter. Every list must be
/// non-empty. Enumeration is row-major with the last axis fastest.
struct SearchSpace {
    std::vector<std::vector<int>> n_intermediate;   ///< one list per branch
    std::vector<double> intermediate_volume_max_m3;
    std::vector<double> q_turbine_max_m3s;          ///< applied to every stage
    std::vector<double> p_pump_max_w;               ///< applied to every stage

    bool operator==(const SearchSpace&) const = default;

    std::uint64_t size() const;
};

/// One point of the search space.
struct CandidateConfig {
    std::vector<int> n_intermediate; ///< per branch
    double intermediate_volume_max_m3 = 0.0;
    double q_turbine_max_m3s = 0.0;
    double p_pump_max_w = 0.0;

    bool operator==(const CandidateConfig&) const = default;
};

/// Series and step inputs a fitness evaluation simulates against.
struct SimulationInputs {
    TimeSeries load_w;
    TimeSeries renewable_w;
    std::map<std::string, TimeSeries> natural_inflows;
    double dt_s = 3600.0;
    PhysicalConstants constants;
};

struct FitnessResult {
    double fitness = 0.0; ///< +inf when the configuration is invalid
    bool valid = false;
    std::vector<Violation> violations; ///< attached when invalid
    RunSummary summary;                ///< meaningful when valid
};

struct Evaluation {
    CandidateConfig config;
    double fitness = 0.0;
};

struct OptimizeResult {
    CandidateConfig best;
    double best_fitness = 0.0;
    std::vector<Evaluation> log; ///< every evaluated configuration, in order
    bool exhaustive = false;
};

/// Builds the concrete network for one candidate: each branch is rebuilt with
/// the candidate's intermediate count and sizing, branches are merged on
/// shared lake ids.
CascadeNetwork instantiate_config(const ConfigTemplate& tmpl, const CandidateConfig& candidate);

/// Extracts a template from an existing tree network: every root-to-leaf
/// chain becomes a branch (leaf order follows stage declaration order) and
/// interior reservoirs are treated as rebuildable intermediates. Branch
/// efficiencies and the turbine flow floor are taken from each branch's first
/// stage; sizing comes from `defaults`.
ConfigTemplate derive_config_template(const CascadeNetwork& network,
                                      const StageDefaults& defaults = {});

/// Candidate at a given row-major index of the space.
CandidateConfig candidate_at(const SearchSpace& space, std::uint64_t index);

/// Simulates one candidate and scores it. An invalid network yields an
/// infinite fitness with the validation report attached instead of throwing.
FitnessResult evaluate_fitness(const ConfigTemplate& tmpl, const CandidateConfig& candidate,
                               const SimulationInputs& inputs, const FitnessWeights& weights);

/// Configuration search: exhaustive enumeration when the space fits the
/// budget, otherwise seeded sampling followed by coordinate descent. The
/// returned fitness is always the minimum over the evaluation log; ties break
/// toward the earliest evaluation (enumeration order when exhaustive).
/// Throws std::invalid_argument on an empty search space or zero budget.
OptimizeResult optimize(const ConfigTemplate& tmpl, const SearchSpace& space,
                        const SimulationInputs& inputs, const FitnessWeights& weights,
                        std::uint64_t budget, std::uint64_t seed = 0);

} // namespace cpmhs
