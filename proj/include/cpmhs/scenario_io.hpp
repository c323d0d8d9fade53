#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpmhs/model.hpp"
#include "cpmhs/optimizer.hpp"
#include "cpmhs/planner.hpp"
#include "cpmhs/simulation.hpp"

namespace cpmhs {

/// A complete, runnable case: network, bound time series, step size, and
/// optional search/fitness settings.
struct Scenario {
    std::string name;
    std::string description;
    double dt_s = 3600.0;
    CascadeNetwork network;
    TimeSeries load_w;
    TimeSeries renewable_w;
    std::map<std::string, TimeSeries> natural_inflows;
    std::optional<FitnessWeights> weights;
    std::optional<SearchSpace> search_space;
    /// Externally reported energy estimates (GWh) keyed by lake id, printed
    /// alongside derived values by the energy estimator.
    std::map<std::string, double> reference_energy_gwh;

    bool operator==(const Scenario&) const = default;

    SimulationInputs simulation_inputs() const;
};

/// Loads a scenario JSON document plus the CSV series it references (paths
/// relative to the scenario file). Throws ParseError with file/field context,
/// ValidationError with the full network report, or SeriesError on
/// inconsistent series.
Scenario load_scenario(const std::filesystem::path& path);

/// Writes scenario.json plus one CSV per bound series into `dir`. Output is
/// byte-deterministic. Returns the scenario file path.
std::filesystem::path save_scenario(const Scenario& scenario, const std::filesystem::path& dir);

/// Time-series CSV: header `step,value_w` or `step,value_m3s`, 0-based
/// contiguous step indices, finite decimal values. The declared unit must
/// match expected_unit.
TimeSeries load_timeseries_csv(const std::filesystem::path& path, SeriesUnit expected_unit,
                               double dt_s = 3600.0);

void write_timeseries_csv(const std::filesystem::path& path, const TimeSeries& series);

/// Terrain CSV for the planner: header `distance_km,elevation_m`.
TerrainProfile load_terrain_csv(const std::filesystem::path& path);

/// Row of the bundled case-study lake table.
struct LakeInfo {
    std::string id;
    std::string name;
    double elevation_m = 0.0;
    double distance_km = 0.0;      ///< horizontal distance from the upper lake; 0 for the upper lake itself
    double surface_area_m2 = 0.0;
    std::optional<double> storage_volume_m3;
    std::optional<double> reference_energy_gwh; ///< externally reported estimate, upper-lake volume over this head
};

/// Physical characteristics of Mountain Lake and its surrounding lakes.
/// The first row is the upper reservoir.
const std::vector<LakeInfo>& mountain_lake_table();

/// The bundled Mountain Lake case study: Mountain Lake as upper reservoir,
/// a 2-intermediate branch to Rush Lake (63.01 m over 1.09 km) and a
/// 3-intermediate branch to Ives Lake (26.76 m over 3.78 km), 24 h of flat
/// 1 MW load and zero renewable input. Intermediate sizing uses the
/// documented defaults. With include_superior, Lake Superior is attached
/// below Rush Lake as an unbounded sink/source.
Scenario bundled_mountain_lake_scenario(bool include_superior = false);

/// Resolves "bundled:<name>" pseudo-paths to built-in scenarios, otherwise
/// loads from disk.
Scenario resolve_scenario(const std::string& path_or_bundled);

/// Names of the built-in scenarios accepted by resolve_scenario.
std::vector<std::string> bundled_scenario_names();

/// Writes steps.csv, reservoirs.csv, and summary.json into out_dir (created
/// if missing). Byte-identical across runs on identical inputs. Returns the
/// written paths.
std::vector<std::filesystem::path> write_results(const CascadeNetwork& network,
                                                 const RunResult& result,
                                                 const std::filesystem::path& out_dir);

/// Writes the optimizer evaluation log as CSV (flattened config columns plus
/// fitness) and best_config.json. Returns the written paths.
std::vector<std::filesystem::path> write_optimize_results(const SearchSpace& space,
                                                          const OptimizeResult& result,
                                                          const std::filesystem::path& out_dir);

/// Applies one `key=value` override to a loaded scenario. Supported paths:
///   name, dt_s, grid.{import_max_w,export_max_w},
///   reservoirs.<id>.<field>, stages.<id>.<field>, weights.<field>.
/// Overriding an elevation rederives the heads of adjacent stages. Unknown
/// paths or unparseable values throw OverrideError before any computation.
void apply_override(Scenario& scenario, const std::string& dotted_key, const std::string& value);

/// Parses "key=value" and applies it.
void apply_override_expr(Scenario& scenario, const std::string& expr);

/// Potential-energy summary for one branch terminal lake.
struct BranchEnergy {
    std::string lake_id;
    double head_m = 0.0;        ///< total drop from the branch's upper lake
    double ur_volume_m3 = 0.0;  ///< upper lake storage volume
    double derived_gwh = 0.0;   ///< rho*g*head*volume at unit efficiency
    std::optional<double> reference_gwh;
};

/// Energy estimates per branch of the scenario network, using each chain's
/// root as the upper reservoir. Reference figures come from
/// scenario.reference_energy_gwh when present.
std::vector<BranchEnergy> estimate_branch_energies(const Scenario& scenario,
                                                   const PhysicalConstants& constants = {});

} // namespace cpmhs
