#include <charconv>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpmhs/hydraulics.hpp"
#include "cpmhs/planner.hpp"
#include "cpmhs/scenario_io.hpp"
#include "cpmhs/simulation.hpp"

namespace {

using namespace cpmhs;

// Shortest round-trip form, so reports are stable for scripting.
std::string num(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string fixed4(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, 4);
    return std::string(buf, ptr);
}

struct Options {
    std::string scenario;
    std::string out_dir;
    std::string terrain;
    std::vector<std::string> overrides;
    double net_load_w = 0.0;
    bool net_load_set = false;
    double segment_max_km = PlanConstraints{}.segment_max_km;
    double head_min_m = PlanConstraints{}.head_min_m;
    std::uint64_t budget = 0; // 0 = whole space
    std::uint64_t seed = 0;
};

Scenario load_with_overrides(const Options& opt) {
    Scenario scenario = resolve_scenario(opt.scenario);
    for (const std::string& expr : opt.overrides) apply_override_expr(scenario, expr);
    return scenario;
}

int run_validate(const Options& opt) {
    const Scenario scenario = load_with_overrides(opt);
    const auto report = validate_network(scenario.network);
    if (!report.empty()) {
        std::cout << format_violations(report);
        return 1;
    }
    std::cout << "ok: '" << scenario.name << "' passed validation ("
              << scenario.network.reservoirs.size() << " reservoirs, "
              << scenario.network.stages.size() << " stages, "
              << scenario.load_w.values.size() << " steps)\n";
    return 0;
}

int run_estimate_energy(const Options& opt) {
    const Scenario scenario = load_with_overrides(opt);
    std::cout << "lake,head_m,ur_volume_m3,derived_gwh,reference_gwh\n";
    for (const BranchEnergy& be : estimate_branch_energies(scenario)) {
        std::cout << be.lake_id << "," << num(be.head_m) << "," << num(be.ur_volume_m3) << ","
                  << fixed4(be.derived_gwh) << ","
                  << (be.reference_gwh ? fixed4(*be.reference_gwh) : "-") << "\n";
    }
    return 0;
}

int run_simulate(const Options& opt) {
    const Scenario scenario = load_with_overrides(opt);
    const RunResult result = run_simulation(scenario.network, scenario.load_w,
                                            scenario.renewable_w, scenario.dt_s,
                                            scenario.natural_inflows);
    for (const auto& path : write_results(scenario.network, result, opt.out_dir)) {
        std::cout << "wrote " << path.string() << "\n";
    }
    const RunSummary& s = result.summary;
    std::cout << "steps=" << s.n_steps << " load_wh=" << num(s.load_wh)
              << " generated_wh=" << num(s.generated_wh) << " pumped_wh=" << num(s.pumped_wh)
              << " imported_wh=" << num(s.imported_wh) << " exported_wh=" << num(s.exported_wh)
              << " unserved_wh=" << num(s.unserved_wh) << " curtailed_wh=" << num(s.curtailed_wh)
              << " spilled_m3=" << num(s.spilled_m3) << "\n";
    return 0;
}

int run_dispatch(const Options& opt) {
    const Scenario scenario = load_with_overrides(opt);
    const NetworkIndex index = build_index(scenario.network);
    const auto states = initial_states(scenario.network);
    const double net_load = opt.net_load_set
                                ? opt.net_load_w
                                : scenario.load_w.values.at(0) - scenario.renewable_w.values.at(0);

    const DispatchDecision d =
        dispatch_step(scenario.network, index, states, net_load, scenario.dt_s);
    std::cout << "net_load_w=" << num(net_load)
              << (net_load > 0 ? " (deficit)" : net_load < 0 ? " (surplus)" : " (balanced)")
              << "\n";
    for (std::size_t si = 0; si < d.actions.size(); ++si) {
        const StageAction& a = d.actions[si];
        std::cout << "stage " << scenario.network.stages[si].id << ": ";
        switch (a.kind) {
        case StageActionKind::idle:
            std::cout << "idle\n";
            break;
        case StageActionKind::generate:
            std::cout << "generate q_m3s=" << num(a.flow_m3s) << " p_w=" << num(a.power_w) << "\n";
            break;
        case StageActionKind::pump:
            std::cout << "pump q_m3s=" << num(a.flow_m3s) << " p_w=" << num(a.power_w) << "\n";
            break;
        }
    }
    std::cout << "grid_import_w=" << num(d.grid_import_w) << " grid_export_w="
              << num(d.grid_export_w) << " unserved_w=" << num(d.unserved_w)
              << " curtailed_w=" << num(d.curtailed_w) << "\n";
    return 0;
}

int run_plan(const Options& opt) {
    const TerrainProfile profile = load_terrain_csv(opt.terrain);
    PlanConstraints constraints;
    constraints.segment_max_km = opt.segment_max_km;
    constraints.head_min_m = opt.head_min_m;
    const CascadePlan plan = plan_cascade(profile, constraints);

    std::cout << "intermediates=" << plan.n_intermediate << " total_head_m="
              << num(plan.total_head_m) << " span_km=" << num(plan.sites.back().distance_km)
              << "\n";
    std::cout << "site,distance_km,elevation_m\n";
    for (std::size_t i = 0; i < plan.sites.size(); ++i) {
        std::cout << i << "," << num(plan.sites[i].distance_km) << ","
                  << num(plan.sites[i].elevation_m) << "\n";
    }
    std::cout << "segment,span_km,head_m\n";
    for (std::size_t i = 0; i < plan.segments.size(); ++i) {
        std::cout << i << "," << num(plan.segments[i].span_km) << ","
                  << num(plan.segments[i].head_m) << "\n";
    }
    return 0;
}

int run_optimize(const Options& opt) {
    const Scenario scenario = load_with_overrides(opt);
    if (!scenario.search_space) {
        throw std::domain_error("scenario '" + scenario.name +
                                "' declares no search_space to optimize over");
    }
    const SearchSpace& space = *scenario.search_space;
    const ConfigTemplate tmpl = derive_config_template(scenario.network);
    if (space.n_intermediate.size() != tmpl.branches.size()) {
        std::ostringstream msg;
        msg << "search_space lists " << space.n_intermediate.size() << " branches, network has "
            << tmpl.branches.size();
        throw std::domain_error(msg.str());
    }
    const std::uint64_t budget = opt.budget > 0 ? opt.budget : space.size();

    const OptimizeResult result =
        optimize(tmpl, space, scenario.simulation_inputs(),
                 scenario.weights.value_or(FitnessWeights{}), budget, opt.seed);

    std::cout << "evaluations=" << result.log.size()
              << " exhaustive=" << (result.exhaustive ? "true" : "false")
              << " best_fitness=" << num(result.best_fitness) << "\n";
    std::cout << "best: n_intermediate=";
    for (std::size_t b = 0; b < result.best.n_intermediate.size(); ++b) {
        std::cout << (b ? "/" : "") << result.best.n_intermediate[b];
    }
    std::cout << " intermediate_volume_max_m3=" << num(result.best.intermediate_volume_max_m3)
              << " q_turbine_max_m3s=" << num(result.best.q_turbine_max_m3s)
              << " p_pump_max_w=" << num(result.best.p_pump_max_w) << "\n";
    if (!opt.out_dir.empty()) {
        for (const auto& path : write_optimize_results(space, result, opt.out_dir)) {
            std::cout << "wrote " << path.string() << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascade pumped micro-hydro storage toolkit"};
    app.require_subcommand(1);
    Options opt;

    auto add_scenario = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", opt.scenario,
                        "scenario file, or bundled:<name> (bundled:mountain-lake, "
                        "bundled:mountain-lake-superior)")
            ->required();
        cmd->add_option("--set", opt.overrides, "override, e.g. --set stages.rush_s1.eta_turbine=0.92");
    };

    CLI::App* validate = app.add_subcommand("validate", "check a scenario's network invariants");
    add_scenario(validate);

    CLI::App* estimate = app.add_subcommand(
        "estimate-energy", "potential energy per branch at unit efficiency");
    add_scenario(estimate);

    CLI::App* simulate = app.add_subcommand("simulate", "run the scenario and write result files");
    add_scenario(simulate);
    simulate->add_option("--out", opt.out_dir, "output directory")->required();

    CLI::App* dispatch = app.add_subcommand("dispatch",
                                            "single-step controller decision (debugging aid)");
    add_scenario(dispatch);
    dispatch->add_option("--net-load-w", opt.net_load_w,
                         "net load override; default: first step of the scenario")
        ->each([&](const std::string&) { opt.net_load_set = true; });

    CLI::App* plan = app.add_subcommand("plan", "place intermediate reservoirs along a terrain profile");
    plan->add_option("--terrain", opt.terrain, "terrain CSV (distance_km,elevation_m)")->required();
    plan->add_option("--segment-max-km", opt.segment_max_km, "maximum span per stage");
    plan->add_option("--head-min-m", opt.head_min_m, "minimum head per stage");

    CLI::App* optimize_cmd =
        app.add_subcommand("optimize", "search the scenario's configuration space");
    add_scenario(optimize_cmd);
    optimize_cmd->add_option("--budget", opt.budget, "evaluation budget; 0 = whole space");
    optimize_cmd->add_option("--seed", opt.seed, "sampling seed");
    optimize_cmd->add_option("--out", opt.out_dir, "directory for the evaluation log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate) return run_validate(opt);
        if (*estimate) return run_estimate_energy(opt);
        if (*simulate) return run_simulate(opt);
        if (*dispatch) return run_dispatch(opt);
        if (*plan) return run_plan(opt);
        if (*optimize_cmd) return run_optimize(opt);
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n" << format_violations(e.report);
        return 1;
    } catch (const OverrideError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
